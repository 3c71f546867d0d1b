"""Bayesian quantum state and process tomography with sequential Monte
Carlo, constructive prior distributions, and diffusive state tracking."""

from . import design, harness, likelihood, priors, qobj, randq, smc, tracking

__all__ = [
    "design",
    "harness",
    "likelihood",
    "priors",
    "qobj",
    "randq",
    "smc",
    "tracking",
]

__version__ = "0.1.0"
