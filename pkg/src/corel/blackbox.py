"""Synthetic sequence objectives with exact enumeration oracles and budget metering."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from corel.acquisition import pareto_mask
from corel.distributions import BRUTE_FORCE_LIMIT, all_sequences, check_sequence
from corel.errors import BudgetExhausted, DimensionError, InvalidInputError


@dataclass
class BlackBox:
    """A deterministic objective over fixed-length sequences.

    ``batch_fn`` maps an ``(n, L)`` int array to an ``(n, M)`` float array.
    ``minimize`` records the natural sense of the objectives; the loop
    converts to its own convention at the boundary.
    """

    name: str
    length: int
    alphabet_size: int
    n_objectives: int
    batch_fn: Callable[[np.ndarray], np.ndarray]
    minimize: bool = True
    params: dict | None = None

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=int))
        if X.shape[1] != self.length:
            raise DimensionError(f"{self.name}: expected length {self.length}, got {X.shape[1]}")
        if X.size and (X.min() < 0 or X.max() >= self.alphabet_size):
            raise InvalidInputError(f"{self.name}: token index outside alphabet")
        return np.asarray(self.batch_fn(X), dtype=float).reshape(len(X), self.n_objectives)

    def evaluate(self, x) -> np.ndarray:
        return self.evaluate_batch([check_sequence(x, self.alphabet_size)])[0]

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)


def cutoff_motif_landscape(target, alphabet_size: int, threshold: int, base: float = 0.0, slope: float = 1.0) -> BlackBox:
    """Flat at ``base`` until ``threshold`` positions match the motif, then linear descent."""
    target = np.asarray(check_sequence(target, alphabet_size))
    L = len(target)
    if not 0 <= threshold <= L:
        raise InvalidInputError(f"threshold must lie in [0, {L}]")

    def f(X):
        matches = (X == target).sum(axis=1)
        return np.where(matches < threshold, base, base - slope * (matches - threshold + 1))[:, None]

    params = {"target": tuple(int(t) for t in target), "threshold": threshold, "base": base, "slope": slope}
    return BlackBox("cutoff_motif", L, alphabet_size, 1, f, minimize=True, params=params)


def weighted_hamming_landscape(target, alphabet_size: int, position_weights=None) -> BlackBox:
    target = np.asarray(check_sequence(target, alphabet_size))
    weights = np.ones(len(target)) if position_weights is None else np.asarray(position_weights, dtype=float)
    if weights.shape != target.shape or np.any(weights < 0):
        raise InvalidInputError("position weights must be a nonnegative vector of length L")

    def f(X):
        return ((X != target) * weights).sum(axis=1)[:, None]

    params = {"target": tuple(int(t) for t in target), "position_weights": weights.tolist()}
    return BlackBox("weighted_hamming", len(target), alphabet_size, 1, f, minimize=True, params=params)


def two_objective_landscape(target_a, target_b, alphabet_size: int) -> BlackBox:
    """Maximize (-hamming(x, A), -hamming(x, B))."""
    a = np.asarray(check_sequence(target_a, alphabet_size))
    b = np.asarray(check_sequence(target_b, alphabet_size))
    if a.shape != b.shape:
        raise DimensionError("targets must have the same length")

    def f(X):
        return -np.stack([(X != a).sum(axis=1), (X != b).sum(axis=1)], axis=1).astype(float)

    params = {"target_a": tuple(int(t) for t in a), "target_b": tuple(int(t) for t in b)}
    return BlackBox("two_objective", len(a), alphabet_size, 2, f, minimize=False, params=params)


class Metered:
    """Budget-limited view of a black box.

    The counter is guarded by a lock; calls past the budget raise
    :class:`BudgetExhausted` without touching the wrapped function.
    """

    def __init__(self, bb: BlackBox, budget: int | None):
        if budget is not None and budget < 0:
            raise InvalidInputError("budget must be >= 0")
        self.inner = bb
        self.budget = budget
        self.counter = 0
        self._lock = threading.Lock()

    def __getattr__(self, name):
        return getattr(self.inner, name)

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.counter

    def _reserve(self, n: int) -> None:
        with self._lock:
            if self.budget is not None and self.counter + n > self.budget:
                raise BudgetExhausted(f"{self.inner.name}: budget of {self.budget} evaluations exhausted")
            self.counter += n

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=int))
        self._reserve(len(X))
        return self.inner.evaluate_batch(X)

    def evaluate(self, x) -> np.ndarray:
        self._reserve(1)
        return self.inner.evaluate(x)

    __call__ = evaluate


def metered(bb: BlackBox, budget: int | None) -> Metered:
    return Metered(bb, budget)


def exhaustive_values(bb: BlackBox, limit: int = BRUTE_FORCE_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """All sequences and their objective vectors."""
    X = all_sequences(bb.length, bb.alphabet_size, limit)
    return X, bb.evaluate_batch(X)


def exhaustive_optimum(bb: BlackBox, limit: int = BRUTE_FORCE_LIMIT) -> np.ndarray:
    """Optimal sequences: argmin/argmax set for M=1, the Pareto set for M=2."""
    X, Y = exhaustive_values(bb, limit)
    if bb.n_objectives == 1:
        y = Y[:, 0]
        best = y.min() if bb.minimize else y.max()
        return X[y == best]
    gains = -Y if bb.minimize else Y
    return X[pareto_mask(gains)]
