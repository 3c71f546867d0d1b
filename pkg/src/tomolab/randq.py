"""Seedable samplers for random matrices, states, and channels.

All samplers consume randomness through an :class:`RngStream`, a thin
wrapper around a counter-based generator keyed by ``(seed, stream_id)``.
Two streams with the same key replay bit-identical sequences; distinct
keys are statistically independent, so per-trial or per-worker streams
can be drawn in any scheduling order without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qobj import ChoiState, DensityOperator, partial_trace

BCSZ_EIG_FLOOR = 1e-12
_BCSZ_MAX_RETRIES = 100


class RngStream:
    """Reproducible randomness source addressed by (seed, stream_id).

    ``child(i, j, ...)`` derives an independent stream that is a pure
    function of the parent key and the indices, which keeps parallel
    simulations reproducible regardless of thread scheduling.
    """

    def __init__(self, seed: int, stream_id: int = 0, _key: tuple | None = None):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._key = (self.stream_id,) if _key is None else _key
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, *indices: int) -> "RngStream":
        """Independent stream derived deterministically from this one."""
        key = self._key + tuple(int(i) for i in indices)
        return RngStream(self.seed, self.stream_id, _key=key)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self._key})"


def ginibre_matrix(dim: int, rank: int, rng: RngStream) -> np.ndarray:
    """dim x rank matrix with i.i.d. standard complex Gaussian entries.

    Real and imaginary parts are each N(0, 1), so E|g|^2 = 2.
    """
    if dim < 1 or rank < 1:
        raise ValueError("dimensions must be positive")
    g = rng.generator
    block = g.standard_normal((2, dim, rank))
    return block[0] + 1j * block[1]


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix.

    The phases of the R diagonal are absorbed into Q, which removes the
    gauge freedom of the raw QR factorization.
    """
    q, r = np.linalg.qr(ginibre_matrix(dim, dim, rng))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def ginibre_state(dim: int, rank: int, rng: RngStream) -> DensityOperator:
    """Random density operator A A^dag / Tr[A A^dag], A Ginibre dim x rank."""
    if rank > dim:
        raise ValueError("rank cannot exceed dimension")
    a = ginibre_matrix(dim, rank, rng)
    rho = a @ a.conj().T
    return DensityOperator(matrix=rho / np.trace(rho).real)


def bures_state(dim: int, rng: RngStream) -> DensityOperator:
    """Random density operator from the Bures measure.

    (I + U) A A^dag (I + U^dag) normalized, with A square Ginibre and U
    Haar; A is drawn before U.
    """
    a = ginibre_matrix(dim, dim, rng)
    u = haar_unitary(dim, rng)
    m = (np.eye(dim) + u) @ a
    rho = m @ m.conj().T
    return DensityOperator(matrix=rho / np.trace(rho).real)


def ginibre_rebit_state(rank: int, rng: RngStream) -> DensityOperator:
    """Random rebit: real 2 x rank Ginibre entries, so the state has no
    Y component."""
    if rank not in (1, 2):
        raise ValueError("rebit rank must be 1 or 2")
    a = rng.generator.standard_normal((2, rank))
    rho = a @ a.T
    return DensityOperator(matrix=(rho / np.trace(rho)).astype(complex))


def _inv_sqrt_scaled(y: np.ndarray, scale: float) -> np.ndarray:
    """Hermitian (scale * Y)^(-1/2) with an eigenvalue floor on Y."""
    lam, vecs = np.linalg.eigh(y)
    lam = np.maximum(lam, BCSZ_EIG_FLOOR)
    return (vecs / np.sqrt(scale * lam)) @ vecs.conj().T


def bcsz_channel(dim: int, kraus_rank: int, rng: RngStream) -> ChoiState:
    """Random CPTP channel from the BCSZ ensemble, as a unit-trace Choi state.

    Draws rho = X X^dag with X Ginibre on the D**2 space, then enforces
    trace preservation by sandwiching with the inverse square root of the
    input marginal Y = Tr_out[rho]:

        J(Lambda)/D = (Y(-1/2) (x) I) rho (Y(-1/2) (x) I) / D.

    The result has Kraus rank ``kraus_rank`` almost surely.
    """
    if not 1 <= kraus_rank <= dim * dim:
        raise ValueError("Kraus rank must lie in [1, D**2]")
    eye = np.eye(dim)
    for _ in range(_BCSZ_MAX_RETRIES):
        x = ginibre_matrix(dim * dim, kraus_rank, rng)
        rho = x @ x.conj().T
        y = partial_trace(rho, (dim, dim), keep="first")
        if np.linalg.eigvalsh(y).min() > BCSZ_EIG_FLOOR:
            break
    else:
        raise RuntimeError("input marginal stayed numerically singular after retries")
    sandwich = np.kron(_inv_sqrt_scaled(y, float(dim)), eye)
    z = sandwich @ rho @ sandwich.conj().T
    z /= np.trace(z).real
    return ChoiState(matrix=z, dim_in=dim, dim_out=dim)


@dataclass(frozen=True)
class GinibreSpec:
    """Declarative description of a Ginibre state ensemble."""

    dim: int
    rank: int
    real_valued: bool = False

    def __post_init__(self):
        if not 1 <= self.rank <= self.dim:
            raise ValueError("rank must lie in [1, dim]")
        if self.real_valued and self.dim != 2:
            raise ValueError("real-valued sampling is only defined for rebits")

    def sample(self, rng: RngStream) -> DensityOperator:
        if self.real_valued:
            return ginibre_rebit_state(self.rank, rng)
        return ginibre_state(self.dim, self.rank, rng)
