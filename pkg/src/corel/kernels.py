"""Hellinger-type covariance functions on factorized distributions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from corel.distributions import (
    BRUTE_FORCE_LIMIT,
    all_sequences,
    check_weighting,
    hellinger_sq_matrix,
    joint_probabilities,
    weighted_hellinger_sq_matrix,
)
from corel.errors import DimensionError, InvalidInputError, SpaceTooLargeError

VARIANTS = ("plain-hellinger", "weighted-hellinger", "product-of-weightings")
JITTER = 1e-8


@dataclass(frozen=True)
class KernelParams:
    theta: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.theta > 0 and self.lam > 0):
            raise InvalidInputError(f"theta and lambda must be positive, got {self.theta}, {self.lam}")


@dataclass(frozen=True)
class KernelSpec:
    """Which Hellinger kernel to use and with what parameters.

    ``product-of-weightings`` multiplies one weighted kernel per weighting
    but applies the amplitude ``theta`` only once.
    """

    variant: str = "plain-hellinger"
    weightings: tuple = ()
    params: KernelParams = field(default_factory=KernelParams)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown kernel variant {self.variant!r}; choose from {VARIANTS}")
        ws = tuple(check_weighting(w) for w in self.weightings)
        object.__setattr__(self, "weightings", ws)
        if self.variant == "plain-hellinger" and ws:
            raise InvalidInputError("plain-hellinger takes no weightings")
        if self.variant == "weighted-hellinger" and len(ws) != 1:
            raise InvalidInputError("weighted-hellinger needs exactly one weighting")
        if self.variant == "product-of-weightings" and len(ws) < 1:
            raise InvalidInputError("product-of-weightings needs at least one weighting")
        if len({w.shape for w in ws}) > 1:
            raise DimensionError("all weightings must share one (L, A) shape")

    @property
    def theta(self) -> float:
        return self.params.theta

    @property
    def lam(self) -> float:
        return self.params.lam

    def with_params(self, theta: float | None = None, lam: float | None = None) -> "KernelSpec":
        params = KernelParams(
            self.params.theta if theta is None else theta,
            self.params.lam if lam is None else lam,
        )
        return replace(self, params=params)


def _as_stack(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 2:
        P = P[None]
    if P.ndim != 3:
        raise DimensionError(f"expected (n, L, A) stack of distributions, got shape {P.shape}")
    return P


def distance_matrix(spec: KernelSpec, P, Q=None) -> np.ndarray:
    """Pairwise distances entering the exponent (before scaling by lambda).

    Plain: r; weighted: r_w; product: Σ_n r_{w_n}.
    """
    P = _as_stack(P)
    Q = P if Q is None else _as_stack(Q)
    if P.shape[1:] != Q.shape[1:]:
        raise DimensionError(f"shape mismatch: {P.shape[1:]} vs {Q.shape[1:]}")
    for w in spec.weightings:
        if w.shape != P.shape[1:]:
            raise DimensionError(f"weighting shape {w.shape} does not match distributions {P.shape[1:]}")
    if spec.variant == "plain-hellinger":
        return np.sqrt(hellinger_sq_matrix(P, Q))
    D = np.zeros((P.shape[0], Q.shape[0]))
    for w in spec.weightings:
        D += np.sqrt(weighted_hellinger_sq_matrix(P, Q, w))
    return D


def cross_kernel(spec: KernelSpec, P, Q) -> np.ndarray:
    return spec.theta * np.exp(-spec.lam * distance_matrix(spec, P, Q))


def kernel_eval(spec: KernelSpec, p, q) -> float:
    return float(cross_kernel(spec, p, q)[0, 0])


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix; each unordered pair is evaluated once."""
    P = _as_stack(points)
    D = distance_matrix(spec, P)
    iu = np.triu_indices(len(P), k=1)
    D[(iu[1], iu[0])] = D[iu]
    np.fill_diagonal(D, 0.0)
    return spec.theta * np.exp(-spec.lam * D)


def canonical_induced_kernel(
    k_base: Callable[[tuple, tuple], float], p, q, limit: int = 10**4
) -> float:
    """Σ_{x,x'} p(x) k(x, x') q(x') by enumerating all sequence pairs.

    Only feasible for tiny spaces; serves as a reference for the relaxed model.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")
    L, A = p.shape
    if A**L > limit:
        raise SpaceTooLargeError(f"A**L = {A**L} exceeds the enumeration budget {limit}")
    seqs = [tuple(int(t) for t in s) for s in all_sequences(L, A, BRUTE_FORCE_LIMIT)]
    jp = joint_probabilities(p)
    jq = joint_probabilities(q)
    K = np.array([[k_base(x, y) for y in seqs] for x in seqs])
    return float(jp @ K @ jq)
