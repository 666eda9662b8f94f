"""Maximizing an acquisition over factorized distributions.

Acquisitions are batch callables: they take an ``(n, L, A)`` stack of
distributions and return ``n`` scores, larger being better.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from corel.distributions import argmax_sequence, indicators, sample_sequences
from corel.errors import InvalidInputError, OptimizationFailedError
from corel.priors import ToyDecoder

logger = logging.getLogger(__name__)

Acquisition = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProposalBudget:
    max_acq_evals: int = 500
    restarts: int = 3
    sample_budget: int = 64

    def __post_init__(self):
        if self.max_acq_evals < 1 or self.restarts < 1 or self.sample_budget < 0:
            raise InvalidInputError(f"invalid proposal budget {self}")


@dataclass
class DiscreteSearchResult:
    best: tuple
    value: float
    visited: dict = field(repr=False)
    n_evals: int = 0
    warnings: list = field(default_factory=list)

    def ranked(self) -> list[tuple]:
        """Visited sequences by decreasing score; ties keep visit order."""
        items = list(self.visited.items())
        order = sorted(range(len(items)), key=lambda i: -items[i][1])
        return [items[i][0] for i in order]


def _score_sequences(acq: Acquisition, seqs, alphabet_size: int) -> np.ndarray:
    return np.asarray(acq(indicators(seqs, alphabet_size)), dtype=float)


def optimize_acq_discrete(
    acq: Acquisition,
    seeds,
    budget: ProposalBudget,
    alphabet_size: int,
    allowed_tokens=None,
    rng: np.random.Generator | None = None,
) -> DiscreteSearchResult:
    """Best-improvement hill climbing over single-token substitutions.

    Each seed starts a climb that moves to the best neighbour while it strictly
    improves. The total number of acquisition calls never exceeds
    ``budget.max_acq_evals``. With ``rng`` the neighbour order is shuffled so
    ties between equally scored neighbours are broken at random.
    """
    seeds = [tuple(int(t) for t in s) for s in seeds]
    if not seeds:
        raise InvalidInputError("discrete search needs at least one seed")
    tokens = np.arange(alphabet_size) if allowed_tokens is None else np.asarray(allowed_tokens)
    cap = budget.max_acq_evals
    visited: dict[tuple, float] = {}
    used = 0
    warnings: list[str] = []

    def score(batch):
        nonlocal used
        fresh = [s for s in dict.fromkeys(batch) if s not in visited]
        fresh = fresh[: cap - used]
        if fresh:
            vals = _score_sequences(acq, fresh, alphabet_size)
            used += len(fresh)
            visited.update(zip(fresh, vals.tolist()))
        return [(s, visited[s]) for s in batch if s in visited]

    for seed in seeds:
        if used >= cap:
            break
        scored = score([seed])
        if not scored:
            break
        current, current_val = scored[0]
        while used < cap:
            neighbours = [
                current[:l] + (int(a),) + current[l + 1 :]
                for l in range(len(current))
                for a in tokens
                if a != current[l]
            ]
            if rng is not None:
                neighbours = [neighbours[i] for i in rng.permutation(len(neighbours))]
            if cap - used < sum(1 for s in neighbours if s not in visited):
                warnings.append(f"budget {cap} smaller than the neighbourhood; search degraded")
            candidates = score(neighbours)
            if not candidates:
                break
            nxt, nxt_val = max(candidates, key=lambda kv: kv[1])
            if nxt_val <= current_val:
                break
            current, current_val = nxt, nxt_val

    if not visited:
        raise OptimizationFailedError("no acquisition evaluations were possible")
    items = list(visited.items())
    best_i = int(np.argmax([v for _, v in items]))
    for w in dict.fromkeys(warnings):
        logger.debug(w)
    return DiscreteSearchResult(items[best_i][0], items[best_i][1], visited, used, list(dict.fromkeys(warnings)))


def optimize_acq_continuous(
    acq: Acquisition,
    decode: Callable[[np.ndarray], np.ndarray],
    z_starts,
    budget: ProposalBudget,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Nelder-Mead on ``z -> acq(decode(z))`` from every start.

    Returns ``(z*, decode(z*), value)``. A restart only replaces its start
    point when it strictly improves on it; the best restart wins, earlier
    restarts on ties.
    """
    if isinstance(decode, ToyDecoder):
        decode = decode.decode
    starts = [np.asarray(z, dtype=float) for z in z_starts]
    if not starts:
        raise InvalidInputError("continuous search needs at least one start")

    def beta(z):
        return float(acq(decode(z)[None])[0])

    best_z, best_val = None, -np.inf
    for k, z0 in enumerate(starts):
        v0 = beta(z0)

        def neg(z):
            v = beta(z)
            return -v if np.isfinite(v) else np.inf

        res = minimize(
            neg, z0, method="Nelder-Mead",
            options={"maxfev": budget.max_acq_evals, "fatol": tol, "xatol": tol},
        )
        z, v = (res.x, -res.fun) if np.isfinite(res.fun) and -res.fun > v0 else (z0, v0)
        logger.debug("restart %d: start %.6g -> %.6g after %d evaluations", k, v0, v, res.nfev)
        if np.isfinite(v) and v > best_val:
            best_z, best_val = z, v
    if best_z is None:
        raise OptimizationFailedError("acquisition was non-finite at every evaluation")
    return best_z, decode(best_z), best_val


def sequence_from_distribution(P, acq: Acquisition, b: int, rng: np.random.Generator) -> tuple:
    """Most likely sequence, replaced by any of ``b`` samples scoring strictly higher."""
    seqs = [argmax_sequence(P)]
    if b > 0:
        seqs += [tuple(int(t) for t in s) for s in sample_sequences(P, b, rng)]
    vals = _score_sequences(acq, seqs, np.asarray(P).shape[1])
    # argmax picks the first maximum, which is exactly "replace on strict improvement"
    return seqs[int(np.argmax(vals))]


def batch_from_distribution(
    P,
    acq: Acquisition,
    batch_size: int,
    b: int,
    rng: np.random.Generator,
    exclude=(),
) -> tuple[list[tuple], np.ndarray]:
    """Top ``batch_size`` distinct sequences by acquisition from argmax + samples.

    Sequences in ``exclude`` are never returned. If too few distinct
    candidates remain, up to ``10 * max(b, batch_size)`` further samples are
    drawn; a shorter batch is returned (with a warning) if that is not enough.
    Returns the sequences and their scores.
    """
    if batch_size < 1:
        raise InvalidInputError("batch_size must be >= 1")
    P = np.asarray(P, dtype=float)
    exclude = set(exclude)
    pool = [argmax_sequence(P)]
    if b > 0:
        pool += [tuple(int(t) for t in s) for s in sample_sequences(P, b, rng)]
    pool = [s for s in dict.fromkeys(pool) if s not in exclude]
    extra_left = 10 * max(b, batch_size)
    while len(pool) < batch_size and extra_left > 0:
        draw = min(extra_left, max(batch_size, 16))
        extra_left -= draw
        for s in sample_sequences(P, draw, rng):
            s = tuple(int(t) for t in s)
            if s not in exclude and s not in pool:
                pool.append(s)
    if len(pool) < batch_size:
        logger.warning("only %d distinct candidates for a batch of %d", len(pool), batch_size)
    if not pool:
        return [], np.empty(0)
    vals = _score_sequences(acq, pool, P.shape[1])
    order = np.argsort(-vals, kind="stable")[:batch_size]
    return [pool[i] for i in order], vals[order]
