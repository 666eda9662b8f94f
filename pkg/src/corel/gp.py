"""Gaussian-process regression over factorized distributions.

The covariance is ``theta * (R(lambda) + nugget * I)`` where ``R`` is the
unit-amplitude Hellinger correlation matrix. The constant mean ``mu`` and the
amplitude ``theta`` have closed forms given ``R``; ``lambda`` and the nugget
(noise variance in units of ``theta``) maximize the profiled evidence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from corel.errors import DimensionError, FactorizationError, InvalidInputError, UnfittableModelError
from corel.kernels import JITTER, KernelSpec, _as_stack, distance_matrix

logger = logging.getLogger(__name__)

THETA_FLOOR = 1e-12


@dataclass(frozen=True)
class EvidenceSearch:
    lam_bounds: tuple[float, float] = (1e-3, 1e3)
    noise_bounds: tuple[float, float] = (1e-8, 1e1)
    grid: tuple[int, int] = (25, 13)
    max_steps: int = 50
    rtol: float = 1e-4


def mean_and_amplitude(K: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Generalized-least-squares constant mean and the matching amplitude.

    ``K`` is the unit-amplitude covariance (including any nugget). With a
    single observation the amplitude is unidentifiable and defaults to 1.

    >>> mean_and_amplitude(np.eye(2), np.array([0.0, 2.0]))
    (1.0, 2.0)
    """
    y = np.asarray(y, dtype=float)
    c = _cholesky(K)
    return _mean_and_amplitude(c, y)


def _mean_and_amplitude(c: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    ones = np.ones_like(y)
    Ki_y = cho_solve((c, True), y)
    Ki_1 = cho_solve((c, True), ones)
    mu = float(ones @ Ki_y / (ones @ Ki_1))
    if len(y) < 2:
        return mu, 1.0
    r = y - mu
    theta = float(r @ cho_solve((c, True), r)) / (len(y) - 1)
    return mu, max(theta, THETA_FLOOR)


def _cholesky(K: np.ndarray) -> np.ndarray:
    try:
        return cholesky(K, lower=True, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise FactorizationError(str(exc)) from None


def _unit_covariance(D: np.ndarray, lam: float, noise: float) -> np.ndarray:
    R = np.exp(-lam * D)
    R[np.diag_indices_from(R)] += noise + JITTER
    return R


def _profiled_evidence(D: np.ndarray, y: np.ndarray, lam: float, noise: float):
    """Log evidence with mu and theta re-derived at (lam, noise)."""
    R = _unit_covariance(D, lam, noise)
    c = _cholesky(R)
    mu, theta = _mean_and_amplitude(c, y)
    r = y - mu
    beta = solve_triangular(c, r, lower=True, check_finite=False)
    n = len(y)
    logdet = 2.0 * np.sum(np.log(np.diag(c))) + n * np.log(theta)
    value = -0.5 * float(beta @ beta) / theta - 0.5 * logdet - 0.5 * n * np.log(2 * np.pi)
    return value, mu, theta, c


def _training_data(train_points, y) -> tuple[np.ndarray, np.ndarray]:
    P = _as_stack(train_points)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) != len(P) or len(y) < 1:
        raise DimensionError(f"{len(P)} training points but {y.shape} observations")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("observations must be finite")
    return P, y


@dataclass
class GPModel:
    """A conditioned GP; immutable by convention once built."""

    train_points: np.ndarray
    y: np.ndarray
    spec: KernelSpec
    noise: float
    mu: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    evidence: float = float("nan")
    path: list = field(default_factory=list, repr=False)

    @property
    def theta(self) -> float:
        return self.spec.theta

    @property
    def lam(self) -> float:
        return self.spec.lam

    @property
    def sigma_sq(self) -> float:
        """Observation-noise variance in the units of ``y``."""
        return self.theta * self.noise

    @property
    def covariance(self) -> np.ndarray:
        """K + sigma^2 I (jitter included), reconstructed from the factor."""
        return self.theta * (self.chol @ self.chol.T)

    @classmethod
    def condition(cls, train_points, y, spec: KernelSpec, lam: float, noise: float) -> "GPModel":
        """Build a model at fixed (lambda, noise); mu and theta from closed forms."""
        P, y = _training_data(train_points, y)
        D = distance_matrix(spec, P)
        value, mu, theta, c = _profiled_evidence(D, y, lam, noise)
        # alpha solves (K + sigma^2 I) alpha = y - mu with K = theta * R
        alpha = cho_solve((c, True), y - mu) / theta
        return cls(P, y, spec.with_params(theta=theta, lam=lam), noise, mu, c, alpha, value)

    def posterior(self, points, clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and latent variance at a stack of query distributions."""
        Q = _as_stack(points)
        if Q.shape[1:] != self.train_points.shape[1:]:
            raise DimensionError(f"query shape {Q.shape[1:]} does not match {self.train_points.shape[1:]}")
        Kx = np.exp(-self.lam * distance_matrix(self.spec, Q, self.train_points))
        mean = self.mu + self.theta * (Kx @ self.alpha)
        v = solve_triangular(self.chol, Kx.T, lower=True, check_finite=False)
        var = self.theta * (1.0 - np.sum(v * v, axis=0))
        if clamp:
            var = np.maximum(var, 0.0)
        return mean, var


def posterior(model: GPModel, p_star) -> tuple[float, float]:
    mean, var = model.posterior(p_star)
    return float(mean[0]), float(var[0])


def log_evidence(train_points, y, spec: KernelSpec, lam: float, noise: float) -> float:
    """Profiled log evidence; -inf when the covariance cannot be factorized."""
    D = distance_matrix(spec, _as_stack(train_points))
    try:
        return _profiled_evidence(D, np.asarray(y, dtype=float), lam, noise)[0]
    except FactorizationError:
        return -np.inf


def _safe_evidence(D, y, lam, noise) -> float:
    try:
        value = _profiled_evidence(D, y, lam, noise)[0]
    except FactorizationError:
        return -np.inf
    return value if np.isfinite(value) else -np.inf


def fit(train_points, y, spec: KernelSpec, search: EvidenceSearch = EvidenceSearch()) -> GPModel:
    """Maximize the evidence over (lambda, noise) on a log grid, then refine.

    Refinement is coordinate descent in log space: each step tries a move of
    the current size along each axis in both directions and halves the size
    when nothing improves by more than ``rtol`` relative.
    """
    P, y = _training_data(train_points, y)
    D = distance_matrix(spec, P)

    log_lo = np.log10([search.lam_bounds[0], search.noise_bounds[0]])
    log_hi = np.log10([search.lam_bounds[1], search.noise_bounds[1]])
    lam_grid = np.linspace(log_lo[0], log_hi[0], search.grid[0])
    noise_grid = np.linspace(log_lo[1], log_hi[1], search.grid[1])

    best, best_x = -np.inf, None
    for a in lam_grid:
        for b in noise_grid:
            value = _safe_evidence(D, y, 10**a, 10**b)
            if value > best:
                best, best_x = value, np.array([a, b])
    if best_x is None:
        raise UnfittableModelError("covariance not positive definite anywhere on the evidence grid")

    steps = np.array([lam_grid[1] - lam_grid[0], noise_grid[1] - noise_grid[0]]) / 2
    path = [(10 ** best_x[0], 10 ** best_x[1], best)]
    for _ in range(search.max_steps):
        moved = False
        for axis in range(2):
            for sign in (1.0, -1.0):
                trial = best_x.copy()
                trial[axis] = np.clip(trial[axis] + sign * steps[axis], log_lo[axis], log_hi[axis])
                value = _safe_evidence(D, y, 10 ** trial[0], 10 ** trial[1])
                if value > best + search.rtol * max(abs(best), 1.0):
                    best, best_x, moved = value, trial, True
                    path.append((10 ** trial[0], 10 ** trial[1], value))
                    break
        if not moved:
            steps /= 2
            if np.all(steps < 1e-3):
                break

    model = GPModel.condition(P, y, spec, 10 ** best_x[0], 10 ** best_x[1])
    model.path = path
    logger.debug("fit: lambda=%.4g noise=%.4g mu=%.4g theta=%.4g evidence=%.4f",
                 model.lam, model.noise, model.mu, model.theta, model.evidence)
    return model
