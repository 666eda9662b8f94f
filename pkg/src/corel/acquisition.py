"""Acquisition functions and two-objective Pareto/hypervolume machinery.

Single-objective scores use the minimization convention (improvement is
``best - f``). Multi-objective code maximizes every objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from corel.errors import InvalidInputError, InvalidReferenceError, UndefinedMetricError

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _npdf(z):
    with np.errstate(over="ignore"):
        return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


ACQ_KINDS = ("EI", "UCB", "EHVI")


@dataclass(frozen=True)
class AcqSpec:
    kind: str = "EI"
    kappa: float = 2.0
    mc_samples: int = 1000
    xi: float = 0.0

    def __post_init__(self):
        if self.kind not in ACQ_KINDS:
            raise InvalidInputError(f"unknown acquisition {self.kind!r}; choose from {ACQ_KINDS}")
        if self.kappa < 0:
            raise InvalidInputError("kappa must be >= 0")
        if self.mc_samples < 1:
            raise InvalidInputError("mc_samples must be >= 1")


def expected_improvement(mean, variance, best_so_far, xi: float = 0.0):
    """Closed-form EI for minimization; vectorized over ``mean``/``variance``."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    gap = best_so_far - xi - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, gap / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = np.where(sigma > 0, gap * ndtr(z) + sigma * _npdf(z), np.maximum(gap, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


def ucb_score(mean, variance, kappa: float = 2.0):
    score = -np.asarray(mean, dtype=float) + kappa * np.sqrt(np.maximum(np.asarray(variance, dtype=float), 0.0))
    return float(score) if score.ndim == 0 else score


def pareto_mask(points) -> np.ndarray:
    """Boolean mask of the non-dominated rows of a 2-column array (maximization).

    Sweeps the distinct points in decreasing lexicographic order: a point is
    non-dominated iff its second objective beats every point seen before it.
    Copies of a front point are all kept.
    """
    Y = np.asarray(points, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise InvalidInputError(f"expected an (n, 2) array, got shape {Y.shape}")
    uniq, inverse = np.unique(Y, axis=0, return_inverse=True)
    keep = np.zeros(len(uniq), dtype=bool)
    best_b = -np.inf
    for i in range(len(uniq) - 1, -1, -1):  # np.unique sorts ascending
        if uniq[i, 1] > best_b:
            keep[i] = True
            best_b = uniq[i, 1]
    return keep[np.ravel(inverse)]


def pareto_front(points) -> np.ndarray:
    Y = np.asarray(points, dtype=float)
    if len(Y) == 0:
        raise InvalidInputError("pareto_front needs at least one point")
    return Y[pareto_mask(Y)]


def hypervolume_2d(front, ref_point) -> float:
    """Area dominated by ``front`` and bounded below by ``ref_point``."""
    F = np.asarray(front, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref_point, dtype=float)
    if np.any(F < ref):
        raise InvalidReferenceError("every front point must weakly dominate the reference point")
    order = np.lexsort((-F[:, 1], -F[:, 0]))
    area, top = 0.0, ref[1]
    for a, b in F[order]:
        if b > top:
            area += (a - ref[0]) * (b - top)
            top = b
    return float(area)


@dataclass
class ParetoState:
    """Observed objective vectors, their front and a fixed reference point."""

    ref_point: np.ndarray
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        self.ref_point = np.asarray(self.ref_point, dtype=float)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    @classmethod
    def from_initial(cls, Y, margin: float = 0.01) -> "ParetoState":
        """Reference = componentwise minimum minus ``margin`` of the range."""
        Y = np.asarray(Y, dtype=float).reshape(-1, 2)
        lo, hi = Y.min(axis=0), Y.max(axis=0)
        span = hi - lo
        span = np.where(span > 0, span, np.maximum(np.abs(lo), 1.0))
        return cls(lo - margin * span, Y)

    @property
    def front(self) -> np.ndarray:
        if len(self.points) == 0:
            return self.points
        return pareto_front(self.points)

    @property
    def scoring_front(self) -> np.ndarray:
        """Front members weakly dominating the reference point."""
        F = self.front
        return F[np.all(F >= self.ref_point, axis=1)]

    @property
    def hypervolume(self) -> float:
        return hypervolume_2d(self.scoring_front, self.ref_point)

    def add(self, Y) -> None:
        self.points = np.vstack([self.points, np.asarray(Y, dtype=float).reshape(-1, 2)])


def _psi(threshold, mean, sigma):
    """E[max(0, Y - threshold)] for Y ~ N(mean, sigma^2), broadcasting."""
    gap = mean - threshold
    with np.errstate(invalid="ignore"):
        safe = np.where(sigma > 0, sigma, 1.0)
        z = gap / safe
        value = gap * ndtr(z) + sigma * _npdf(z)
    value = np.where(np.isposinf(threshold), 0.0, value)
    return np.where(sigma > 0, value, np.maximum(gap, 0.0))


def ehvi_2d(means, variances, state: ParetoState):
    """Exact expected hypervolume improvement for independent Gaussian objectives.

    The region above the reference and not dominated by the front is cut into
    vertical cells ``(a_i, a_{i+1}] x (b_{i+1}, inf)`` along the front sorted
    by the first objective; within a cell the improvement factorizes, so its
    expectation is a product of one-dimensional expectations.

    Accepts a single ``(2,)`` candidate or a batch ``(n, 2)``.
    """
    means = np.asarray(means, dtype=float)
    single = means.ndim == 1
    M = np.atleast_2d(means)
    S = np.sqrt(np.maximum(np.atleast_2d(np.asarray(variances, dtype=float)), 0.0))
    F = state.scoring_front
    F = F[np.argsort(F[:, 0], kind="stable")]
    ref = state.ref_point
    lower_a = np.concatenate([[ref[0]], F[:, 0]])
    upper_a = np.concatenate([F[:, 0], [np.inf]])
    floor_b = np.concatenate([F[:, 1], [ref[1]]])
    m1, s1 = M[:, :1], S[:, :1]
    m2, s2 = M[:, 1:], S[:, 1:]
    width = _psi(lower_a[None], m1, s1) - _psi(upper_a[None], m1, s1)
    height = _psi(floor_b[None], m2, s2)
    out = np.maximum(np.sum(width * height, axis=1), 0.0)
    return float(out[0]) if single else out


def ehvi_2d_mc(means, variances, state: ParetoState, n_samples: int, rng: np.random.Generator):
    """Monte Carlo EHVI; returns ``(estimate, standard_error)``."""
    means = np.asarray(means, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(variances, dtype=float), 0.0))
    Y = means + sd * rng.standard_normal((n_samples, 2))
    gains = _improvement_batch(Y, state.scoring_front, state.ref_point)
    return float(gains.mean()), float(gains.std(ddof=1) / np.sqrt(n_samples))


def _improvement_batch(Y: np.ndarray, F: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Hypervolume gained by adding each row of ``Y`` alone to front ``F``.

    Gain = area of the box [ref, y] minus the part of it the front already
    dominates, i.e. the hypervolume of the front clipped to y.
    """
    box = np.prod(np.maximum(Y - ref, 0.0), axis=1)
    if len(F) == 0:
        return box
    clipped = np.minimum(F[None, :, :], np.maximum(Y, ref)[:, None, :])
    order = np.argsort(-clipped[:, :, 0], axis=1, kind="stable")
    clipped = np.take_along_axis(clipped, order[:, :, None], axis=1)
    top = np.maximum.accumulate(clipped[:, :, 1], axis=1)
    prev = np.concatenate([np.full((len(Y), 1), ref[1]), top[:, :-1]], axis=1)
    covered = np.sum((clipped[:, :, 0] - ref[0]) * (top - prev), axis=1)
    return np.maximum(box - covered, 0.0)


def relative_hypervolume(state: ParetoState, initial_front) -> float:
    initial = np.asarray(initial_front, dtype=float).reshape(-1, 2)
    initial = initial[np.all(initial >= state.ref_point, axis=1)]
    base = hypervolume_2d(initial, state.ref_point) if len(initial) else 0.0
    if base <= 0:
        raise UndefinedMetricError("initial front has zero hypervolume")
    return state.hypervolume / base
