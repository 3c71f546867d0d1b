"""Sequential Monte Carlo over hypothesis coordinate vectors.

A particle cloud is a weighted set of coordinate rows together with a
description of the space the rows live in (state, Choi state, or coin,
optionally extended by a trailing diffusion-rate column).  Bayes updates
multiply weights by likelihoods; when the effective sample size drops,
the cloud is rejuvenated with a Liu-West kernel that shrinks particles
toward the mean, adds Gaussian noise matched to the cloud covariance,
and projects everything back to the valid set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .likelihood import Datum, datum_likelihood
from .priors import PriorDistribution
from .qobj import DimensionMismatchError, OperatorBasis, VectorizedOperator
from .randq import RngStream
from .tracking import coin_truncate, truncate_to_choi, truncate_to_state

RANK_CUTOFF = 1e-12
SUPPORT_RESIDUAL_TOL = 1e-8
LIU_WEST_A = 0.98
ESS_THRESHOLD = 0.5


class DegenerateUpdateError(RuntimeError):
    """Every particle assigned zero likelihood; the posterior is lost."""


@dataclass(frozen=True, eq=False)
class HypothesisSpace:
    """Geometry of one hypothesis row: which coordinates make up the
    state and how to project a perturbed row back to validity."""

    kind: str  # "state" | "choi" | "coin"
    basis: Optional[OperatorBasis] = None
    channel_dim: Optional[int] = None
    n_hyper: int = 0

    def __post_init__(self):
        if self.kind not in ("state", "choi", "coin"):
            raise ValueError(f"unknown hypothesis kind {self.kind!r}")
        if self.kind == "coin":
            if self.basis is not None:
                raise ValueError("coins carry no operator basis")
        elif self.basis is None:
            raise ValueError("state and choi spaces need an operator basis")
        if self.kind == "choi" and self.channel_dim is None:
            raise ValueError("choi spaces need the channel dimension")

    @property
    def n_state_coords(self) -> int:
        return 1 if self.kind == "coin" else self.basis.size

    @property
    def n_coords(self) -> int:
        return self.n_state_coords + self.n_hyper

    def project(self, locations: np.ndarray) -> np.ndarray:
        """Project rows onto the valid set (hyper columns clamped at 0)."""
        out = np.array(locations, dtype=float)
        w = self.n_state_coords
        if self.kind == "coin":
            out[:, 0] = coin_truncate(out[:, 0])
        else:
            mats = self.basis.devectorize(out[:, :w])
            if self.kind == "choi":
                mats = truncate_to_choi(mats, self.channel_dim)
            else:
                mats = truncate_to_state(mats)
            out[:, :w] = self.basis.vectorize(mats)
        if self.n_hyper:
            out[:, w:] = np.maximum(out[:, w:], 0.0)
        return out


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    """Weighted particle approximation of a posterior."""

    locations: np.ndarray  # (n, d) float
    weights: np.ndarray    # (n,) float, sums to one
    space: HypothesisSpace

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if loc.ndim != 2 or w.ndim != 1 or loc.shape[0] != w.shape[0]:
            raise DimensionMismatchError("locations and weights do not align")
        if loc.shape[1] != self.space.n_coords:
            raise DimensionMismatchError("row width does not match the hypothesis space")
        if w.min() < 0.0 or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to one")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @property
    def n_particles(self) -> int:
        return self.locations.shape[0]


@dataclass(frozen=True)
class PosteriorSummary:
    """Cheap-to-serialize posterior digest."""

    mean: VectorizedOperator
    covariance: np.ndarray
    ess: float
    total_log_norm: float


@dataclass(frozen=True)
class CredibleEllipsoid:
    """Covariance ellipsoid membership test at scale ``z``.

    A point belongs iff its offset from the center lies in the support
    (column space) of the covariance and the Mahalanobis form there is at
    most z**2.  A zero-covariance posterior contains only its center.
    """

    center: np.ndarray
    covariance: np.ndarray
    z: float

    def contains(self, coords) -> bool:
        if isinstance(coords, VectorizedOperator):
            coords = coords.coords
        delta = np.asarray(coords, dtype=float) - self.center
        lam, vecs = np.linalg.eigh(self.covariance)
        lam = np.clip(lam, 0.0, None)
        cutoff = lam.max() * RANK_CUTOFF if lam.size else 0.0
        support = lam > cutoff
        comps = vecs.T @ delta
        residual = np.linalg.norm(comps[~support]) if (~support).any() else 0.0
        if residual > SUPPORT_RESIDUAL_TOL * max(1.0, float(np.linalg.norm(delta))):
            return False
        if not support.any():
            return True
        mahal = float(np.sum(comps[support] ** 2 / lam[support]))
        return mahal <= self.z**2


def space_for_prior(prior: PriorDistribution, n_hyper: int = 0) -> HypothesisSpace:
    if prior.basis is None:
        return HypothesisSpace(kind="coin", n_hyper=n_hyper)
    if prior.channel_dim is not None:
        return HypothesisSpace(kind="choi", basis=prior.basis,
                               channel_dim=prior.channel_dim, n_hyper=n_hyper)
    return HypothesisSpace(kind="state", basis=prior.basis, n_hyper=n_hyper)


def init_cloud(prior: PriorDistribution, n_particles: int, rng: RngStream,
               eta_sampler=None) -> ParticleCloud:
    """Equal-weight cloud of prior draws.

    ``eta_sampler(n, rng)``, when given, appends a diffusion-rate column
    and marks the space accordingly.
    """
    if n_particles < 2:
        raise ValueError("need at least two particles")
    rows = prior.sample_many(n_particles, rng)
    n_hyper = 0
    if eta_sampler is not None:
        eta = np.asarray(eta_sampler(n_particles, rng), dtype=float)
        if eta.shape != (n_particles,) or eta.min() < 0.0:
            raise ValueError("eta sampler must return nonnegative rates, one per particle")
        rows = np.column_stack([rows, eta])
        n_hyper = 1
    space = space_for_prior(prior, n_hyper=n_hyper)
    weights = np.full(n_particles, 1.0 / n_particles)
    return ParticleCloud(locations=rows, weights=weights, space=space)


def bayes_update(cloud: ParticleCloud, datum: Datum,
                 likelihood_fn: Callable = datum_likelihood) -> tuple[ParticleCloud, float]:
    """Reweight the cloud by the likelihood of one datum.

    Returns the updated cloud and the log of the normalization (the log
    predictive probability of the datum).  Raises
    :class:`DegenerateUpdateError`, leaving the input untouched, when all
    particles get zero likelihood.
    """
    like = np.asarray(likelihood_fn(cloud.locations, datum), dtype=float)
    if like.shape != cloud.weights.shape:
        raise DimensionMismatchError("likelihood must return one value per particle")
    if like.min() < 0.0:
        raise ValueError("negative likelihood")
    raw = cloud.weights * like
    norm = float(raw.sum())
    if not norm > 0.0 or not np.isfinite(norm):
        raise DegenerateUpdateError("all particle likelihoods vanished")
    return replace(cloud, weights=raw / norm), float(np.log(norm))


def effective_sample_size(cloud: ParticleCloud) -> float:
    """1 / sum(w**2): n for uniform weights, 1 for a delta."""
    return float(1.0 / np.sum(cloud.weights**2))


def posterior_mean_coords(cloud: ParticleCloud) -> np.ndarray:
    return cloud.weights @ cloud.locations


def posterior_mean(cloud: ParticleCloud) -> VectorizedOperator:
    """Weighted mean of the cloud (Bayes estimator under quadratic loss).

    For tracked clouds the vector includes the trailing diffusion-rate
    column and carries no basis.
    """
    coords = posterior_mean_coords(cloud)
    basis = cloud.space.basis
    if basis is not None and coords.shape[0] != basis.size:
        basis = None
    return VectorizedOperator(coords=coords, basis=basis)


def posterior_covariance(cloud: ParticleCloud) -> np.ndarray:
    """Weighted covariance of the particle coordinates.

    The trace coordinate is constant on state and Choi spaces, so its row
    and column are zeroed exactly.
    """
    mean = posterior_mean_coords(cloud)
    centered = cloud.locations - mean
    cov = (centered * cloud.weights[:, None]).T @ centered
    cov = 0.5 * (cov + cov.T)
    if cloud.space.kind != "coin":
        cov[0, :] = 0.0
        cov[:, 0] = 0.0
    return cov


def summarize(cloud: ParticleCloud, total_log_norm: float = 0.0) -> PosteriorSummary:
    return PosteriorSummary(mean=posterior_mean(cloud),
                            covariance=posterior_covariance(cloud),
                            ess=effective_sample_size(cloud),
                            total_log_norm=total_log_norm)


def resample(cloud: ParticleCloud, rng: RngStream, a: float = LIU_WEST_A) -> ParticleCloud:
    """Liu-West rejuvenation.

    Draws parents by weight, shrinks them toward the cloud mean by ``a``,
    adds Gaussian noise with covariance (1 - a**2) times the cloud
    covariance (restricted to its column space), projects every row back
    to the valid set, and resets the weights to uniform.  ``a = 1``
    degenerates to plain multinomial resampling.
    """
    if not 0.0 < a <= 1.0:
        raise ValueError("shrinkage a must lie in (0, 1]")
    g = rng.generator
    n = cloud.n_particles
    mean = posterior_mean_coords(cloud)
    parents = g.choice(n, size=n, p=cloud.weights)
    if a == 1.0:
        # plain multinomial: parents are valid rows already
        return replace(cloud, locations=cloud.locations[parents],
                       weights=np.full(n, 1.0 / n))
    moved = a * cloud.locations[parents] + (1.0 - a) * mean
    cov = posterior_covariance(cloud)
    lam, vecs = np.linalg.eigh(cov)
    lam = np.clip(lam, 0.0, None)
    keep = lam > lam.max() * RANK_CUTOFF if lam.size and lam.max() > 0.0 else np.zeros_like(lam, dtype=bool)
    if keep.any():
        scales = np.sqrt((1.0 - a * a) * lam[keep])
        z = g.standard_normal((n, int(keep.sum())))
        moved = moved + (z * scales) @ vecs[:, keep].T
    projected = cloud.space.project(moved)
    return replace(cloud, locations=projected, weights=np.full(n, 1.0 / n))


def maybe_resample(cloud: ParticleCloud, rng: RngStream, a: float = LIU_WEST_A,
                   threshold: float = ESS_THRESHOLD) -> ParticleCloud:
    """Resample when the effective sample size falls below threshold * n."""
    if effective_sample_size(cloud) < threshold * cloud.n_particles:
        return resample(cloud, rng, a=a)
    return cloud


def credible_ellipsoid(cloud: ParticleCloud, z: float) -> CredibleEllipsoid:
    """Covariance ellipsoid at scale ``z`` around the posterior mean."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    return CredibleEllipsoid(center=posterior_mean_coords(cloud),
                             covariance=posterior_covariance(cloud), z=float(z))


def predictive_variance(cloud: ParticleCloud, observable: VectorizedOperator) -> float:
    """Posterior-predictive variance of a Hermitian observable.

    Law of total variance: the coordinate form x^T Sigma x (uncertainty of
    the estimate) plus the quantum variance Tr[X^2 rho_hat] - Tr[X rho_hat]**2
    at the mean.
    """
    basis = cloud.space.basis
    if basis is None:
        raise ValueError("predictive variance needs an operator basis")
    x = np.asarray(observable.coords, dtype=float)
    d = cloud.space.n_state_coords
    if x.shape[0] != d:
        raise DimensionMismatchError("observable does not match the state coordinates")
    cov = posterior_covariance(cloud)[:d, :d]
    mean = posterior_mean_coords(cloud)[:d]
    op = basis.devectorize(x)
    rho = basis.devectorize(mean)
    spread = float(x @ cov @ x)
    second_moment = float(np.trace(op @ op @ rho).real)
    first_moment = float(x @ mean)
    return spread + second_moment - first_moment**2


def principal_components(summary: PosteriorSummary, k: int) -> list[tuple[float, VectorizedOperator]]:
    """Top-k eigenpairs of the posterior covariance, largest first.

    Eigenvectors are unit-norm coordinate vectors, so each devectorizes
    to a Hermitian operator when a basis is attached.
    """
    cov = summary.covariance
    if not 1 <= k <= cov.shape[0]:
        raise ValueError("k must lie in [1, n_coords]")
    lam, vecs = np.linalg.eigh(cov)
    order = np.argsort(lam)[::-1][:k]
    basis = summary.mean.basis
    out = []
    for idx in order:
        vec = VectorizedOperator(coords=vecs[:, idx].copy(), basis=basis)
        out.append((float(lam[idx]), vec))
    return out
