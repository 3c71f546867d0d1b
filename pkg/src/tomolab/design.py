"""Measurement-design heuristics.

Random Pauli measurements for qubits, the twelve qutrit stabilizer
states, random preparation/measurement pairs for process tomography, and
a covariance-guided adaptive rule that picks the proposal whose effect
direction carries the most posterior uncertainty.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .likelihood import ExperimentDesign, process_design
from .qobj import (
    PAULIS,
    DensityOperator,
    Effect,
    OperatorBasis,
    gell_mann_basis,
    pauli_basis,
    vectorize,
)
from .randq import RngStream
from .smc import PosteriorSummary


@dataclass(frozen=True)
class DesignHeuristic:
    """Config-facing description of a design rule."""

    kind: str  # "random_pauli" | "stabilizer_qutrit" | "process_random" | "process_adaptive_mix" | "coin"
    n_meas: int
    n_proposals: int = 50
    adaptive_fraction: float = 0.8

    def __post_init__(self):
        if self.n_meas < 1:
            raise ValueError("n_meas must be positive")
        if self.n_proposals < 1:
            raise ValueError("need at least one proposal")
        if not 0.0 <= self.adaptive_fraction <= 1.0:
            raise ValueError("adaptive fraction must lie in [0, 1]")


def random_pauli_design(n_qubits: int, n_meas: int, rng: RngStream,
                        time: float = 0.0) -> ExperimentDesign:
    """Uniformly random non-identity Pauli string P, measured as (I + P)/2."""
    basis = pauli_basis(n_qubits)
    idx = int(rng.generator.integers(1, basis.size))
    pauli = basis.elements[idx] * np.sqrt(2.0**n_qubits)
    effect = Effect(matrix=(np.eye(2**n_qubits) + pauli) / 2.0)
    return ExperimentDesign(effect=vectorize(effect, basis), n_meas=n_meas, time=time)


@lru_cache(maxsize=1)
def qutrit_stabilizer_states() -> np.ndarray:
    """The 12 qutrit stabilizer states: four mutually unbiased bases.

    Eigenbases of Z, X, XZ, and XZ**2 for the qutrit shift X and clock Z.
    Returned as a (12, 3) array of kets, computational basis first.
    """
    omega = np.exp(2j * np.pi / 3.0)
    z = np.diag([1.0, omega, omega**2])
    x = np.roll(np.eye(3, dtype=complex), 1, axis=0)
    kets = [np.eye(3, dtype=complex)[:, j] for j in range(3)]
    for op in (x, x @ z, x @ z @ z):
        _, vecs = np.linalg.eig(op)
        for j in range(3):
            ket = vecs[:, j]
            kets.append(ket / np.linalg.norm(ket))
    out = np.array(kets)
    out.flags.writeable = False
    return out


def random_stabilizer_qutrit_design(n_meas: int, rng: RngStream,
                                    time: float = 0.0) -> ExperimentDesign:
    """Rank-one projector onto a uniformly random qutrit stabilizer state."""
    kets = qutrit_stabilizer_states()
    ket = kets[int(rng.generator.integers(0, len(kets)))]
    effect = Effect(matrix=np.outer(ket, ket.conj()))
    return ExperimentDesign(effect=vectorize(effect, gell_mann_basis(3)),
                            n_meas=n_meas, time=time)


@lru_cache(maxsize=1)
def pauli_eigenstates() -> tuple[np.ndarray, ...]:
    """Six single-qubit Pauli eigenstate projectors (+-X, +-Y, +-Z)."""
    eye = np.eye(2, dtype=complex)
    out = []
    for axis in ("X", "Y", "Z"):
        for sign in (1.0, -1.0):
            out.append((eye + sign * PAULIS[axis]) / 2.0)
    return tuple(out)


def random_process_pair(rng: RngStream) -> tuple[DensityOperator, Effect]:
    """Random (preparation, measurement) pair from the Pauli eigenstates."""
    states = pauli_eigenstates()
    g = rng.generator
    prep = DensityOperator(matrix=states[int(g.integers(0, 6))])
    meas = Effect(matrix=states[int(g.integers(0, 6))])
    return prep, meas


def random_process_design(n_meas: int, rng: RngStream, basis: OperatorBasis,
                          time: float = 0.0) -> ExperimentDesign:
    """Random composite design for qubit process tomography."""
    prep, meas = random_process_pair(rng)
    return process_design(prep, meas, n_meas, basis, time=time)


def adaptive_design(proposals: list[ExperimentDesign],
                    summary: PosteriorSummary) -> ExperimentDesign:
    """Pick the proposal maximizing x^T Sigma x for its effect coordinates.

    Ties resolve to the earliest proposal.
    """
    if not proposals:
        raise ValueError("need at least one proposal")
    cov = summary.covariance
    scores = np.array([
        float(p.effect.coords @ cov @ p.effect.coords) for p in proposals
    ])
    return proposals[int(np.argmax(scores))]


def scheduled_mix(heuristics, fractions, rng: RngStream) -> ExperimentDesign:
    """Draw one sub-heuristic by its fraction and emit its design.

    ``heuristics`` are zero-argument callables returning a design.
    """
    fractions = np.asarray(fractions, dtype=float)
    if len(heuristics) != fractions.shape[0] or fractions.shape[0] == 0:
        raise ValueError("heuristics and fractions must align")
    if fractions.min() < 0.0 or abs(fractions.sum() - 1.0) > 1e-9:
        raise ValueError("fractions must be nonnegative and sum to one")
    u = rng.generator.random()
    idx = int(np.searchsorted(np.cumsum(fractions), u, side="right"))
    idx = min(idx, len(heuristics) - 1)
    return heuristics[idx]()
