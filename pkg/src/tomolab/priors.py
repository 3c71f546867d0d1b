"""Prior distributions over states, channels, and coins.

A prior is a named sampler emitting real coordinate vectors.  Fiducial
priors wrap the random ensembles directly.  Insightful priors damp a
fiducial sample toward a target mean: with a Beta-distributed mixing
weight eps the sample is

    rho' = (1 - eps) rho_f + eps rho_star,

where (alpha, beta, rho_star) are chosen in closed form so that the
prior mean equals the requested rho_mu while the support of the fiducial
prior is preserved.  The same construction applies verbatim to Choi
states (with I/D**2 taking over the role of the maximally mixed state)
and to classical coins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .qobj import (
    ChoiState,
    DensityOperator,
    InvalidOperatorError,
    OperatorBasis,
    partial_trace,
    standard_basis,
)
from .randq import RngStream, bcsz_channel, bures_state, ginibre_rebit_state, ginibre_state

LAMBDA_FLOOR = 1e-6
_PASSTHROUGH_TOL = 1e-12
GAD_TP_TOL = 1e-6


class PriorConstructionError(ValueError):
    """The requested prior mean cannot be realized."""


@dataclass(frozen=True)
class GadPrior:
    """Closed-form ingredients of an insightful (mean-damped) prior."""

    alpha: float
    beta: float
    lambda_min: float
    rho_mu: np.ndarray
    rho_star: np.ndarray


@dataclass(frozen=True)
class CoinPrior:
    """Coin analogue of :class:`GadPrior`."""

    alpha: float
    beta: float
    p_mu: float
    p_star: float


@dataclass(frozen=True, eq=False)
class PriorDistribution:
    """Named sampler over hypothesis coordinate vectors.

    ``basis`` is None for coins, whose single coordinate is the heads
    probability itself.  ``channel_dim`` is set when samples are Choi
    states on a D**2 space.
    """

    name: str
    kind: str  # "fiducial" | "insightful"
    basis: Optional[OperatorBasis]
    sample_coords: Callable[[RngStream], np.ndarray]
    channel_dim: Optional[int] = None
    gad: Optional[GadPrior] = None
    coin: Optional[CoinPrior] = None
    sample_batch: Optional[Callable[[int, RngStream], np.ndarray]] = None

    @property
    def n_coords(self) -> int:
        return 1 if self.basis is None else self.basis.size

    def sample(self, rng: RngStream) -> np.ndarray:
        return self.sample_coords(rng)

    def sample_many(self, n: int, rng: RngStream) -> np.ndarray:
        """n samples as an (n, n_coords) array; vectorized when available."""
        if self.sample_batch is not None:
            return self.sample_batch(n, rng)
        return np.stack([self.sample_coords(rng) for _ in range(n)])


def ginibre_prior(dim: int, rank: Optional[int] = None,
                  basis: Optional[OperatorBasis] = None) -> PriorDistribution:
    rank = dim if rank is None else rank
    basis = standard_basis(dim) if basis is None else basis

    def draw(rng: RngStream) -> np.ndarray:
        return basis.vectorize(ginibre_state(dim, rank, rng).matrix)

    return PriorDistribution(name=f"ginibre(d={dim},k={rank})", kind="fiducial",
                             basis=basis, sample_coords=draw)


def bures_prior(dim: int, basis: Optional[OperatorBasis] = None) -> PriorDistribution:
    basis = standard_basis(dim) if basis is None else basis

    def draw(rng: RngStream) -> np.ndarray:
        return basis.vectorize(bures_state(dim, rng).matrix)

    return PriorDistribution(name=f"bures(d={dim})", kind="fiducial",
                             basis=basis, sample_coords=draw)


def rebit_ginibre_prior(rank: int = 2, basis: Optional[OperatorBasis] = None) -> PriorDistribution:
    basis = standard_basis(2) if basis is None else basis

    def draw(rng: RngStream) -> np.ndarray:
        return basis.vectorize(ginibre_rebit_state(rank, rng).matrix)

    return PriorDistribution(name=f"rebit-ginibre(k={rank})", kind="fiducial",
                             basis=basis, sample_coords=draw)


def bcsz_prior(dim: int, kraus_rank: Optional[int] = None,
               basis: Optional[OperatorBasis] = None) -> PriorDistribution:
    kraus_rank = dim * dim if kraus_rank is None else kraus_rank
    basis = standard_basis(dim * dim) if basis is None else basis

    def draw(rng: RngStream) -> np.ndarray:
        return basis.vectorize(bcsz_channel(dim, kraus_rank, rng).matrix)

    return PriorDistribution(name=f"bcsz(d={dim},k={kraus_rank})", kind="fiducial",
                             basis=basis, sample_coords=draw, channel_dim=dim)


def coin_uniform_prior() -> PriorDistribution:
    def draw(rng: RngStream) -> np.ndarray:
        return np.array([rng.generator.random()])

    def draw_batch(n: int, rng: RngStream) -> np.ndarray:
        return rng.generator.random((n, 1))

    return PriorDistribution(name="coin-uniform", kind="fiducial",
                             basis=None, sample_coords=draw, sample_batch=draw_batch)


def gad_params(rho_mu) -> tuple[float, float, np.ndarray]:
    """Beta parameters and extremal target realizing prior mean ``rho_mu``.

    With d the dimension of rho_mu and lam its smallest eigenvalue,

        alpha = 1,  beta = d lam / (1 - d lam),
        rho_star = ((alpha + beta)/alpha) (rho_mu - beta/(alpha + beta) I/d).

    Means too close to the boundary (lam <= 1e-6) are rejected; mix the
    requested mean with I/d before calling if that happens.  rho_mu = I/d
    returns beta = inf, signalling passthrough of the fiducial prior.
    """
    if isinstance(rho_mu, (DensityOperator, ChoiState)):
        rho_mu = rho_mu.matrix
    mu = np.asarray(rho_mu, dtype=complex)
    d = mu.shape[0]
    lam_min = float(np.linalg.eigvalsh(mu).min())
    if lam_min >= 1.0 / d - _PASSTHROUGH_TOL:
        return 1.0, np.inf, np.eye(d, dtype=complex) / d
    if lam_min <= LAMBDA_FLOOR:
        raise PriorConstructionError(
            f"prior mean has smallest eigenvalue {lam_min:.3g}; "
            "mix it with I/d to lift it above 1e-6 before building the prior"
        )
    alpha = 1.0
    beta = d * lam_min / (1.0 - d * lam_min)
    rho_star = ((alpha + beta) / alpha) * (
        mu - (beta / (alpha + beta)) * np.eye(d) / d
    )
    return alpha, beta, rho_star


def sample_epsilon(beta: float, rng: RngStream) -> float:
    """Draw eps ~ Beta(1, beta) by inverse CDF; beta = inf gives eps = 0."""
    u = rng.generator.random()
    return 1.0 - u ** (1.0 / beta)


def insightful_prior(fiducial: PriorDistribution, rho_mu) -> PriorDistribution:
    """Damp a fiducial state or channel prior toward the mean ``rho_mu``.

    Returns the fiducial prior unchanged when rho_mu is maximally mixed.
    For channel priors rho_mu must itself be a valid Choi state; the
    extremal target is checked to be trace preserving.
    """
    if fiducial.basis is None:
        raise PriorConstructionError("coin priors use coin_insightful_prior")
    basis = fiducial.basis
    if isinstance(rho_mu, (DensityOperator, ChoiState)):
        rho_mu = rho_mu.matrix
    mu = np.asarray(rho_mu, dtype=complex)
    if mu.shape != (basis.dim, basis.dim):
        raise PriorConstructionError("prior mean dimension does not match the fiducial prior")
    alpha, beta, rho_star = gad_params(mu)
    if np.isinf(beta):
        return fiducial
    if fiducial.channel_dim is not None:
        d = fiducial.channel_dim
        marginal = partial_trace(rho_star, (d, d), keep="first")
        if np.abs(marginal - np.eye(d) / d).max() > GAD_TP_TOL:
            raise PriorConstructionError("extremal channel target is not trace preserving")
    try:
        DensityOperator(matrix=rho_star)
    except InvalidOperatorError as err:
        raise PriorConstructionError(f"extremal target is not a valid state: {err}") from err
    star_coords = basis.vectorize(rho_star)
    gad = GadPrior(alpha=alpha, beta=beta,
                   lambda_min=float(np.linalg.eigvalsh(mu).min()),
                   rho_mu=mu, rho_star=rho_star)

    def draw(rng: RngStream) -> np.ndarray:
        fid = fiducial.sample_coords(rng)
        eps = sample_epsilon(beta, rng)
        return (1.0 - eps) * fid + eps * star_coords

    return PriorDistribution(name=f"insightful({fiducial.name})", kind="insightful",
                             basis=basis, sample_coords=draw,
                             channel_dim=fiducial.channel_dim, gad=gad)


def gad_sample(prior: PriorDistribution, rng: RngStream) -> np.ndarray:
    """Sample coordinates from an insightful prior (or any prior)."""
    return prior.sample(rng)


def coin_gad_params(p_mu: float) -> tuple[float, float, float]:
    """Coin version of :func:`gad_params`.

    lam = min(p_mu, 1 - p_mu), beta = 2 lam / (1 - 2 lam), and

        p_star = ((alpha + beta)/alpha) (p_mu - beta / (2 (alpha + beta))).

    p_mu = 1/2 returns beta = inf (passthrough).
    """
    if not 0.0 <= p_mu <= 1.0:
        raise PriorConstructionError("coin mean must lie in [0, 1]")
    lam = min(p_mu, 1.0 - p_mu)
    if lam >= 0.5 - _PASSTHROUGH_TOL:
        return 1.0, np.inf, 0.5
    if lam <= LAMBDA_FLOOR:
        raise PriorConstructionError(
            "coin mean is too extreme; mix it toward 1/2 before building the prior"
        )
    alpha = 1.0
    beta = 2.0 * lam / (1.0 - 2.0 * lam)
    p_star = ((alpha + beta) / alpha) * (p_mu - beta / (2.0 * (alpha + beta)))
    return alpha, beta, p_star


def coin_insightful_prior(p_mu: float) -> PriorDistribution:
    """Uniform coin prior damped toward mean ``p_mu``."""
    alpha, beta, p_star = coin_gad_params(p_mu)
    if np.isinf(beta):
        return coin_uniform_prior()
    coin = CoinPrior(alpha=alpha, beta=beta, p_mu=p_mu, p_star=p_star)

    def draw(rng: RngStream) -> np.ndarray:
        p_f = rng.generator.random()
        eps = sample_epsilon(beta, rng)
        return np.array([(1.0 - eps) * p_f + eps * p_star])

    def draw_batch(n: int, rng: RngStream) -> np.ndarray:
        p_f = rng.generator.random(n)
        eps = 1.0 - rng.generator.random(n) ** (1.0 / beta)
        return ((1.0 - eps) * p_f + eps * p_star)[:, None]

    return PriorDistribution(name=f"coin-insightful(p={p_mu})", kind="insightful",
                             basis=None, sample_coords=draw, coin=coin,
                             sample_batch=draw_batch)


def coin_gad_sample(prior: PriorDistribution, rng: RngStream) -> float:
    """Heads probability drawn from a coin prior."""
    return float(prior.sample(rng)[0])
