"""Self-checks of the numerical core against independent oracles.

Each check raises ``AssertionError`` naming what failed. ``run_checks``
executes the suite for a level and reports one line per property.
"""

from __future__ import annotations

import time
import traceback
from typing import Callable

import numpy as np

from corel import acquisition, distributions, gp, kernels, optimizers
from corel.blackbox import cutoff_motif_landscape, exhaustive_values, two_objective_landscape, weighted_hamming_landscape

SEED = 20240601
CHECKS: list[tuple[str, str, Callable[[np.random.Generator], None]]] = []


def check(name: str, level: str = "fast"):
    def register(fn):
        CHECKS.append((name, level, fn))
        return fn

    return register


def _shapes():
    return [(L, A) for L in range(1, 6) for A in range(2, 5)]


@check("hellinger-product-vs-brute-force")
def _hellinger_exact(rng, trials=100):
    for L, A in _shapes():
        for _ in range(trials):
            p = distributions.random_distribution(L, A, rng, 0.7)
            q = distributions.random_distribution(L, A, rng, 0.7)
            fast = distributions.hellinger_distance(p, q) ** 2
            slow = distributions.brute_force_hellinger_sq(p, q)
            assert abs(fast - slow) <= 1e-12, f"L={L} A={A}: {fast!r} vs {slow!r}"


@check("weighted-hellinger-product-vs-brute-force")
def _weighted_exact(rng, trials=100):
    for L, A in _shapes():
        for _ in range(trials):
            p = distributions.random_distribution(L, A, rng, 0.7)
            q = distributions.random_distribution(L, A, rng, 0.7)
            w = rng.uniform(0.05, 1.5, size=(L, A))
            fast = distributions.weighted_hellinger_sq(p, q, w)
            slow = distributions.brute_force_hellinger_sq(p, q, w)
            assert abs(fast - slow) <= 1e-12, f"L={L} A={A}: {fast!r} vs {slow!r}"


@check("weighted-hellinger-distinct-indicators")
def _weighted_indicators(rng, trials=200):
    for _ in range(trials):
        L, A = int(rng.integers(1, 6)), int(rng.integers(2, 5))
        x = tuple(rng.integers(A, size=L))
        y = tuple(rng.integers(A, size=L))
        if x == y:
            continue
        w = rng.uniform(0.05, 1.5, size=(L, A))
        got = distributions.weighted_hellinger_sq(distributions.indicator(x, A), distributions.indicator(y, A), w)
        want = 0.5 * (distributions.sequence_weight(x, w) + distributions.sequence_weight(y, w))
        assert abs(got - want) <= 1e-12, f"{x} vs {y}: {got!r} != {want!r}"


def _random_specs(rng, L, A, theta):
    ws = [rng.uniform(0.05, 1.5, size=(L, A)) for _ in range(3)]
    params = kernels.KernelParams(theta, float(rng.uniform(0.1, 10.0)))
    return [
        kernels.KernelSpec("plain-hellinger", (), params),
        kernels.KernelSpec("weighted-hellinger", (ws[0],), params),
        kernels.KernelSpec("product-of-weightings", tuple(ws), params),
    ]


@check("kernel-gram-psd")
def _kernel_psd(rng, trials=20, n=50):
    for _ in range(trials):
        L, A, theta = int(rng.integers(2, 8)), int(rng.integers(2, 6)), float(rng.uniform(0.5, 3.0))
        pts = np.stack([distributions.random_distribution(L, A, rng, 0.5) for _ in range(n)])
        for spec in _random_specs(rng, L, A, theta):
            G = kernels.gram_matrix(spec, pts)
            lo = np.linalg.eigvalsh(G).min()
            assert lo >= -1e-8 * theta, f"{spec.variant}: min eigenvalue {lo:.3e}"


@check("optima-preservation")
def _optima(rng, n_interior=1000):
    A, L = 3, 4
    target = tuple(rng.integers(A, size=L))
    other = tuple(rng.integers(A, size=L))
    boxes = [
        cutoff_motif_landscape(target, A, 2),
        weighted_hamming_landscape(target, A, rng.uniform(0.5, 2.0, size=L)),
        two_objective_landscape(target, other, A),
    ]
    for bb in boxes:
        X, Y = exhaustive_values(bb)
        for j in range(bb.n_objectives):
            loss = Y[:, j] if bb.minimize else -Y[:, j]
            table = {tuple(int(t) for t in x): float(v) for x, v in zip(X, loss)}
            vertex = [distributions.relaxed_objective(table, distributions.indicator(x, A)) for x in X]
            assert int(np.argmin(vertex)) == int(np.argmin(loss)), f"{bb.name}: vertex argmin differs"
            floor = min(vertex)
            for _ in range(n_interior // bb.n_objectives):
                p = distributions.random_distribution(L, A, rng)
                assert distributions.relaxed_objective(table, p) >= floor - 1e-9, f"{bb.name}: interior below vertices"


@check("gp-identity-limit")
def _gp_identity(rng):
    y = rng.normal(size=7)
    mu, theta = gp.mean_and_amplitude(np.eye(7), y)
    assert abs(mu - y.mean()) <= 1e-12 and abs(theta - y.var(ddof=1)) <= 1e-12, (mu, theta)
    mu, theta = gp.mean_and_amplitude(np.eye(2), np.array([0.0, 2.0]))
    assert abs(mu - 1.0) <= 1e-12 and abs(theta - 2.0) <= 1e-12, (mu, theta)


@check("gp-interpolation")
def _gp_interp(rng):
    L, A = 4, 3
    pts = np.stack([distributions.random_distribution(L, A, rng) for _ in range(12)])
    y = rng.normal(size=12)
    spec = kernels.KernelSpec("plain-hellinger", (), kernels.KernelParams(1.0, 3.0))
    model = gp.GPModel.condition(pts, y, spec, 3.0, 1e-12)
    mean, var = model.posterior(pts, clamp=False)
    assert np.max(np.abs(mean - y)) <= 1e-6, f"interpolation error {np.max(np.abs(mean - y)):.3e}"
    assert np.all(var <= 1e-6 * model.theta) and np.all(var >= -1e-8 * model.theta), var


@check("pareto-vs-pairwise")
def _pareto(rng):
    for _ in range(20):
        Y = rng.integers(0, 6, size=(100, 2)).astype(float)
        dom = np.array([np.any(np.all(Y >= y, axis=1) & np.any(Y > y, axis=1)) for y in Y])
        assert np.array_equal(acquisition.pareto_mask(Y), ~dom)


@check("ehvi-deterministic-limits")
def _ehvi_limits(rng):
    state = acquisition.ParetoState(np.zeros(2), np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]]))
    assert acquisition.ehvi_2d([1.5, 1.5], [0, 0], state) == 0.0
    m = np.array([4.0, 4.0])
    want = acquisition.hypervolume_2d(np.vstack([state.front, m]), state.ref_point) - state.hypervolume
    assert abs(acquisition.ehvi_2d(m, [0, 0], state) - want) <= 1e-12
    for f in state.front:
        assert acquisition.ehvi_2d(f, [0, 0], state) == 0.0


@check("sequence-extraction-contract")
def _alg2(rng, trials=200):
    L, A = 5, 4
    for _ in range(trials):
        P = distributions.random_distribution(L, A, rng)
        target = rng.integers(A, size=L)

        def acq(stack):
            return (np.argmax(stack, axis=2) == target).sum(axis=1).astype(float)

        assert optimizers.sequence_from_distribution(P, acq, 0, rng) == distributions.argmax_sequence(P)
        best = optimizers.sequence_from_distribution(P, acq, 50, rng)
        plain = acq(distributions.indicator(distributions.argmax_sequence(P), A)[None])[0]
        assert acq(distributions.indicator(best, A)[None])[0] >= plain
        x = tuple(int(t) for t in rng.integers(A, size=L))
        assert optimizers.sequence_from_distribution(distributions.indicator(x, A), acq, 10, rng) == x


@check("gp-lambda-recovery", level="full")
def _lambda_recovery(rng, n=40, runs=5):
    L, A = 3, 3
    spec = kernels.KernelSpec("plain-hellinger", (), kernels.KernelParams(1.0, 1.0))
    for _ in range(runs):
        pts = np.stack([distributions.random_distribution(L, A, rng, 0.3) for _ in range(n)])
        K = kernels.gram_matrix(spec, pts) + 1e-6 * np.eye(n)
        y = np.linalg.cholesky(K) @ rng.standard_normal(n)
        lam = gp.fit(pts, y, spec).lam
        assert 0.1 <= lam <= 10.0, f"recovered lambda {lam:.3g} not within a factor 10 of 1"


@check("ehvi-vs-monte-carlo", level="full")
def _ehvi_mc(rng, configs=50, samples=10**5):
    for _ in range(configs):
        F = acquisition.pareto_front(rng.uniform(0, 5, size=(5, 2)))
        state = acquisition.ParetoState(np.zeros(2), F)
        m = rng.uniform(0, 6, size=2)
        v = rng.uniform(0.01, 4.0, size=2)
        exact = acquisition.ehvi_2d(m, v, state)
        est, se = acquisition.ehvi_2d_mc(m, v, state, samples, rng)
        assert abs(exact - est) <= 4 * se + 1e-12, f"exact {exact:.6g} vs MC {est:.6g} +- {se:.2g}"


@check("hypervolume-vs-monte-carlo", level="full")
def _hv_mc(rng, fronts=20, samples=10**6):
    for _ in range(fronts):
        F = acquisition.pareto_front(rng.uniform(0, 1, size=(int(rng.integers(1, 10)), 2)))
        hi = F.max(axis=0)
        U = rng.uniform(0, 1, size=(samples, 2)) * hi
        hit = np.zeros(samples, dtype=bool)
        for f in F:
            hit |= np.all(U <= f, axis=1)
        area = np.prod(hi)
        frac = hit.mean()
        se = area * np.sqrt(frac * (1 - frac) / samples)
        exact = acquisition.hypervolume_2d(F, np.zeros(2))
        assert abs(exact - area * frac) <= 3 * se + 1e-12, f"{exact:.6g} vs {area * frac:.6g} +- {se:.2g}"


@check("canonical-kernel-psd", level="full")
def _canonical_psd(rng):
    L, A = 3, 2

    def base(x, y):
        return float(np.exp(-0.7 * distributions.hamming(x, y)))

    pts = [distributions.random_distribution(L, A, rng) for _ in range(10)]
    G = np.array([[kernels.canonical_induced_kernel(base, p, q) for q in pts] for p in pts])
    assert np.linalg.eigvalsh(G).min() >= -1e-8


def run_checks(level: str = "fast", seed: int = SEED, out=print) -> list[tuple[str, bool, str]]:
    levels = ("fast",) if level == "fast" else ("fast", "full")
    results = []
    for name, lvl, fn in CHECKS:
        if lvl not in levels:
            continue
        rng = np.random.default_rng([seed, len(results)])
        tick = time.perf_counter()
        try:
            fn(rng)
        except AssertionError as exc:
            msg = str(exc) or traceback.format_exc(limit=1).strip()
            results.append((name, False, msg))
            out(f"FAIL {name}: {msg} (reproduce with seed {seed})")
            continue
        results.append((name, True, ""))
        out(f"PASS {name} ({time.perf_counter() - tick:.2f}s)")
    return results
