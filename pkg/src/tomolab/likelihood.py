"""Measurement models: Born probabilities and binomial batch likelihoods.

Experiments are two-outcome measurements repeated n_meas times; a datum
records the success count.  States, Choi states, and coins all share the
same code path: the outcome probability is a dot product between the
hypothesis coordinates and the effect coordinates, where a coin is the
one-coordinate hypothesis whose "effect" is the constant vector [1.0].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .qobj import (
    DensityOperator,
    DimensionMismatchError,
    Effect,
    OperatorBasis,
    VectorizedOperator,
    process_effect,
    vectorize,
)
from .randq import RngStream

PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class ExperimentDesign:
    """One configured experiment: an effect measured n_meas times at a
    given clock time."""

    effect: VectorizedOperator
    n_meas: int
    time: float = 0.0

    def __post_init__(self):
        if self.n_meas < 1:
            raise ValueError("n_meas must be positive")
        if self.time < 0.0:
            raise ValueError("time must be nonnegative")


@dataclass(frozen=True)
class Datum:
    """Observed success count for one design."""

    n_success: int
    design: ExperimentDesign

    def __post_init__(self):
        if not 0 <= self.n_success <= self.design.n_meas:
            raise ValueError("success count must lie in [0, n_meas]")


def coin_design(n_meas: int, time: float = 0.0) -> ExperimentDesign:
    """Design measuring the heads outcome of a coin."""
    return ExperimentDesign(effect=VectorizedOperator(coords=np.array([1.0]), basis=None),
                            n_meas=n_meas, time=time)


def born_probability(state_coords, effect_coords) -> np.ndarray:
    """Outcome probability Tr[E rho] as a coordinate dot product.

    Broadcasts over rows of ``state_coords``; rows wider than the effect
    (hypotheses carrying extra hyperparameter columns) use only their
    leading coordinates.  Values are clamped to [0, 1].
    """
    state = np.asarray(state_coords, dtype=float)
    effect = np.asarray(effect_coords, dtype=float)
    if state.shape[-1] < effect.shape[0]:
        raise DimensionMismatchError("hypothesis has fewer coordinates than the effect")
    p = state[..., : effect.shape[0]] @ effect
    return np.clip(p, 0.0, 1.0)


def binomial_pmf(n: int, n_success: int, p) -> np.ndarray:
    """Binomial(n, p) mass at n_success, vectorized over p.

    Exact at the endpoints: p = 0 or 1 contributes probability one to the
    all-failures or all-successes count and zero elsewhere.
    """
    if not 0 <= n_success <= n:
        raise ValueError("success count must lie in [0, n_meas]")
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    log_comb = gammaln(n + 1) - gammaln(n_success + 1) - gammaln(n - n_success + 1)
    with np.errstate(divide="ignore"):
        log_hit = 0.0 if n_success == 0 else n_success * np.log(p)
        log_miss = 0.0 if n_success == n else (n - n_success) * np.log1p(-p)
    return np.exp(log_comb + log_hit + log_miss)


def binomial_likelihood(state_coords, design: ExperimentDesign, n_success: int) -> np.ndarray:
    """Likelihood of observing ``n_success`` under ``design``."""
    p = born_probability(state_coords, design.effect.coords)
    return binomial_pmf(design.n_meas, n_success, p)


def datum_likelihood(locations, datum: Datum) -> np.ndarray:
    """Vectorized likelihood of one datum for each hypothesis row."""
    return binomial_likelihood(locations, datum.design, datum.n_success)


def sequence_log_likelihood(state_coords, effects, counts) -> float:
    """Log likelihood of an i.i.d. outcome record: sum_k n_k log Tr[E_k rho].

    ``effects`` lists the observed outcomes (as vectorized operators or
    bare coordinate arrays) and ``counts`` how often each occurred; there
    is no combinatorial factor.  Returns -inf when an observed outcome
    has zero probability.
    """
    if len(effects) != len(counts):
        raise ValueError("effects and counts must align")
    total = 0.0
    for effect, n_k in zip(effects, counts):
        if n_k < 0:
            raise ValueError("counts must be nonnegative")
        if n_k == 0:
            continue
        coords = effect.coords if isinstance(effect, VectorizedOperator) else effect
        p = float(born_probability(state_coords, coords))
        if p <= 0.0:
            return -np.inf
        total += n_k * np.log(max(p, PROB_FLOOR))
    return total


def simulate_experiment(true_coords, design: ExperimentDesign, rng: RngStream) -> Datum:
    """Draw a binomial success count from the true hypothesis."""
    p = float(born_probability(np.asarray(true_coords, dtype=float), design.effect.coords))
    n_success = int(rng.generator.binomial(design.n_meas, p))
    return Datum(n_success=n_success, design=design)


def process_design(prep: DensityOperator, meas: Effect, n_meas: int,
                   basis: OperatorBasis, time: float = 0.0) -> ExperimentDesign:
    """Design measuring a channel: composite effect on the D**2 space."""
    composite = process_effect(prep, meas)
    return ExperimentDesign(effect=vectorize(composite, basis), n_meas=n_meas, time=time)


def process_likelihood(choi_coords, prep: DensityOperator, meas: Effect,
                       n_meas: int, n_success: int, basis: OperatorBasis) -> np.ndarray:
    """Likelihood of channel data via the composite-effect reduction.

    Identical code path to state likelihoods: the Choi coordinates are
    dotted against the vectorized composite effect.
    """
    design = process_design(prep, meas, n_meas, basis)
    return binomial_likelihood(choi_coords, design, n_success)
