"""Bayesian optimization over discrete sequences with Hellinger-distance kernels."""

from corel.distributions import Alphabet, hellinger_distance, weighted_hellinger_sq
from corel.kernels import KernelParams, KernelSpec, gram_matrix, kernel_eval
from corel.gp import GPModel, fit, posterior

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "GPModel",
    "KernelParams",
    "KernelSpec",
    "fit",
    "gram_matrix",
    "hellinger_distance",
    "kernel_eval",
    "posterior",
    "weighted_hellinger_sq",
]
