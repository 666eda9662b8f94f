"""Sequences, factorized distributions and the (weighted) Hellinger distance.

A factorized distribution over length-``L`` sequences on an alphabet of size
``A`` is stored as an ``(L, A)`` row-stochastic numpy array. Sequences are
tuples of integer token indices so they can be hashed and deduplicated.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence as SequenceABC
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from corel.errors import (
    DimensionError,
    IncompleteTableError,
    InvalidDistributionError,
    InvalidSequenceError,
    InvalidWeightingError,
    SpaceTooLargeError,
)

ROW_SUM_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10**6

Sequence = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of single-character tokens.

    ``gap`` names an optional padding token; it is a regular member of the
    alphabet for the kernel but mutation moves skip it.
    """

    symbols: tuple[str, ...]
    gap: str | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise InvalidSequenceError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise InvalidSequenceError(f"duplicate symbols in alphabet {symbols!r}")
        if self.gap is not None and self.gap not in symbols:
            raise InvalidSequenceError(f"gap token {self.gap!r} not in alphabet")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    @classmethod
    def from_string(cls, letters: str, gap: str | None = None) -> "Alphabet":
        symbols = list(letters)
        if gap is not None and gap not in symbols:
            symbols.append(gap)
        return cls(tuple(symbols), gap=gap)

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def gap_index(self) -> int | None:
        return None if self.gap is None else self._index[self.gap]

    @property
    def mutable_tokens(self) -> np.ndarray:
        """Token indices that mutation moves may introduce (everything but the gap)."""
        return np.array([i for i in range(self.size) if i != self.gap_index], dtype=int)

    def encode(self, text: str) -> Sequence:
        try:
            return tuple(self._index[ch] for ch in text)
        except KeyError as exc:
            raise InvalidSequenceError(f"token {exc.args[0]!r} not in alphabet") from None

    def decode(self, seq) -> str:
        return "".join(self.symbols[i] for i in seq)


def check_sequence(x, alphabet_size: int) -> Sequence:
    """Return ``x`` as a tuple of ints after range checking."""
    seq = tuple(int(t) for t in x)
    if len(seq) < 1:
        raise InvalidSequenceError("sequences must have length >= 1")
    for t in seq:
        if t < 0 or t >= alphabet_size:
            raise InvalidSequenceError(f"token index {t} outside alphabet of size {alphabet_size}")
    return seq


def check_distribution(p, tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Validate an ``(L, A)`` row-stochastic matrix.

    Rows whose sum is off by at most ``tol`` are renormalized; anything
    further off is rejected.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 2:
        raise InvalidDistributionError(f"expected an (L, A) matrix with A >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0 + tol):
        raise InvalidDistributionError("entries must be finite and lie in [0, 1]")
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise InvalidDistributionError(f"row sums deviate from 1 by {np.max(np.abs(sums - 1.0)):.3g}")
    return p / sums[:, None]


def check_weighting(w, shape: tuple[int, int] | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise InvalidWeightingError(f"weighting must be an (L, A) matrix, got shape {w.shape}")
    if shape is not None and w.shape != tuple(shape):
        raise DimensionError(f"weighting shape {w.shape} does not match {tuple(shape)}")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise InvalidWeightingError("weights must be finite and nonnegative")
    return w


def _same_shape(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")


def indicator(x, alphabet_size: int) -> np.ndarray:
    """Atomic distribution putting all mass on ``x``."""
    seq = check_sequence(x, alphabet_size)
    p = np.zeros((len(seq), alphabet_size))
    p[np.arange(len(seq)), seq] = 1.0
    return p


def indicators(seqs, alphabet_size: int) -> np.ndarray:
    """Stack of indicator distributions, shape ``(n, L, A)``."""
    X = np.asarray([check_sequence(s, alphabet_size) for s in seqs], dtype=int)
    n, L = X.shape
    out = np.zeros((n, L, alphabet_size))
    out[np.arange(n)[:, None], np.arange(L)[None, :], X] = 1.0
    return out


def argmax_sequence(p) -> Sequence:
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return tuple(int(i) for i in np.argmax(np.asarray(p), axis=1))


def sample_sequences(p, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` sequences from ``p``; returns an ``(n, L)`` int array."""
    p = np.asarray(p, dtype=float)
    cdf = np.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((n, p.shape[0]))
    idx = (u[:, :, None] >= cdf[None, :, :]).sum(axis=2)
    return np.minimum(idx, p.shape[1] - 1)


def sample_sequence(p, rng: np.random.Generator) -> Sequence:
    return tuple(int(t) for t in sample_sequences(p, 1, rng)[0])


def bhattacharyya(p, q) -> float:
    """Bhattacharyya coefficient of two factorized distributions."""
    return float(np.prod(np.sum(np.sqrt(p * q), axis=1)))


def _from_row_terms(h: np.ndarray) -> np.ndarray:
    """1 - prod_l (1 - h_l) over the last axis, accurate when every h_l is tiny."""
    h = np.clip(h, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        return np.clip(-np.expm1(np.log1p(-h).sum(axis=-1)), 0.0, 1.0)


def hellinger_sq(p, q) -> float:
    """Squared Hellinger distance, ``1 - prod_l sum_a sqrt(p q)``.

    Each row's overlap is written as ``1 - h_l`` with
    ``h_l = sum_a (sqrt p - sqrt q)^2 / 2`` so that ``p == q`` gives exactly 0
    instead of round-off from ``1 - 1``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _same_shape(p, q)
    h = 0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2, axis=1)
    return float(_from_row_terms(h))


def hellinger_distance(p, q) -> float:
    """Hellinger distance between two factorized distributions in O(L*A)."""
    return float(np.sqrt(hellinger_sq(p, q)))


def weighted_hellinger_sq(p, q, w) -> float:
    """Squared prior-weighted Hellinger distance.

    Evaluated as three separate per-position products: half the weighted mass
    of ``p``, half that of ``q``, minus the weighted overlap. Clamped at zero;
    identical inputs give exactly zero.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _same_shape(p, q)
    w = check_weighting(w, p.shape)
    if np.array_equal(p, q):
        return 0.0
    mass_p = np.prod(np.sum(w * p, axis=1))
    mass_q = np.prod(np.sum(w * q, axis=1))
    overlap = np.prod(np.sum(w * np.sqrt(p * q), axis=1))
    return float(max(0.5 * mass_p + 0.5 * mass_q - overlap, 0.0))


def sequence_weight(x, w) -> float:
    """w(x): product of per-position weights along ``x``."""
    w = np.asarray(w, dtype=float)
    return float(np.prod(w[np.arange(len(x)), list(x)]))


# -- batched forms used by kernels / GP ------------------------------------


def _pairwise_overlap(P: np.ndarray, Q: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    """Π_l Σ_a w[l,a] √(P[n,l,a] Q[m,l,a]) for every pair, shape ``(n, m)``.

    The elementwise product is formed before any reduction so the result is
    bitwise symmetric under swapping P and Q.
    """
    sP, sQ = np.sqrt(P), np.sqrt(Q)
    out = np.empty((P.shape[0], Q.shape[0]))
    step = max(1, 2_000_000 // max(1, Q.shape[0] * P.shape[1] * P.shape[2]))
    for start in range(0, P.shape[0], step):
        block = sP[start : start + step, None] * sQ[None]
        if w is not None:
            block = block * w
        out[start : start + step] = np.prod(block.sum(axis=3), axis=2)
    return out


def hellinger_sq_matrix(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Pairwise squared Hellinger distances between stacks ``(n,L,A)`` and ``(m,L,A)``."""
    sP, sQ = np.sqrt(P), np.sqrt(Q)
    out = np.empty((P.shape[0], Q.shape[0]))
    step = max(1, 2_000_000 // max(1, Q.shape[0] * P.shape[1] * P.shape[2]))
    for start in range(0, P.shape[0], step):
        diff = sP[start : start + step, None] - sQ[None]
        out[start : start + step] = _from_row_terms(0.5 * np.sum(diff * diff, axis=3))
    return out


def weighted_hellinger_sq_matrix(P: np.ndarray, Q: np.ndarray, w: np.ndarray) -> np.ndarray:
    mass_p = np.prod((P * w).sum(axis=2), axis=1)
    mass_q = np.prod((Q * w).sum(axis=2), axis=1)
    overlap = _pairwise_overlap(P, Q, w)
    out = np.maximum(0.5 * mass_p[:, None] + 0.5 * mass_q[None, :] - overlap, 0.0)
    out[_equal_pairs(P, Q)] = 0.0
    return out


def _equal_pairs(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Boolean ``(n, m)`` mask of exactly identical distributions."""
    flatP, flatQ = P.reshape(len(P), -1), Q.reshape(len(Q), -1)
    out = np.zeros((len(P), len(Q)), dtype=bool)
    step = max(1, 2_000_000 // max(1, flatQ.size))
    for start in range(0, len(P), step):
        out[start : start + step] = np.all(flatP[start : start + step, None] == flatQ[None], axis=2)
    return out


# -- enumeration oracles ---------------------------------------------------


def _check_space(L: int, A: int, limit: int) -> None:
    if A**L > limit:
        raise SpaceTooLargeError(f"A**L = {A}**{L} exceeds the enumeration budget {limit}")


def all_sequences(L: int, A: int, limit: int = BRUTE_FORCE_LIMIT) -> np.ndarray:
    """Every sequence in lexicographic order as an ``(A**L, L)`` array."""
    _check_space(L, A, limit)
    grids = np.indices((A,) * L).reshape(L, -1).T
    return grids.astype(int)


def joint_probabilities(p, limit: int = BRUTE_FORCE_LIMIT) -> np.ndarray:
    """p(x) for every x, in the order of :func:`all_sequences`."""
    p = np.asarray(p, dtype=float)
    _check_space(*p.shape, limit)
    return reduce(np.multiply.outer, list(p)).ravel()


def brute_force_hellinger_sq(p, q, w=None, limit: int = BRUTE_FORCE_LIMIT) -> float:
    """Definitional sum ½ Σ_x w(x)(√p(x) − √q(x))² over all A**L sequences."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _same_shape(p, q)
    jp = joint_probabilities(p, limit)
    jq = joint_probabilities(q, limit)
    terms = (np.sqrt(jp) - np.sqrt(jq)) ** 2
    if w is not None:
        w = check_weighting(w, p.shape)
        terms = terms * reduce(np.multiply.outer, list(w)).ravel()
    return float(0.5 * terms.sum())


def relaxed_objective(f_table: Mapping, p, limit: int = BRUTE_FORCE_LIMIT) -> float:
    """Expected objective Σ_x f(x) p(x) under a factorized distribution.

    ``f_table`` maps every sequence (tuple of token indices) to its value.
    """
    p = check_distribution(p)
    L, A = p.shape
    seqs = all_sequences(L, A, limit)
    try:
        values = np.array([f_table[tuple(int(t) for t in s)] for s in seqs], dtype=float)
    except KeyError as exc:
        raise IncompleteTableError(f"no objective value for sequence {exc.args[0]}") from None
    return float(values @ joint_probabilities(p, limit))


def random_distribution(L: int, A: int, rng: np.random.Generator, concentration: float = 1.0) -> np.ndarray:
    """Draw a factorized distribution with Dirichlet rows."""
    return rng.dirichlet(np.full(A, concentration), size=L)


def hamming(x: SequenceABC, y: SequenceABC) -> int:
    return sum(a != b for a, b in zip(x, y))
