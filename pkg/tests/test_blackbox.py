import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corel.blackbox import (
    cutoff_motif_landscape,
    exhaustive_optimum,
    exhaustive_values,
    metered,
    two_objective_landscape,
    weighted_hamming_landscape,
)
from corel.distributions import hamming
from corel.errors import BudgetExhausted, DimensionError, InvalidInputError


class TestCutoff:
    def test_full_match(self):
        bb = cutoff_motif_landscape((0, 1, 2, 0, 1, 2), 3, threshold=4, base=2.0, slope=0.5)
        assert bb((0, 1, 2, 0, 1, 2))[0] == 2.0 - 0.5 * (6 - 4 + 1)

    @given(st.lists(st.integers(0, 2), min_size=6, max_size=6))
    def test_plateau(self, x):
        target = (0, 1, 2, 0, 1, 2)
        bb = cutoff_motif_landscape(target, 3, threshold=4, base=2.0)
        m = 6 - hamming(x, target)
        value = bb(x)[0]
        assert value == (2.0 if m < 4 else 2.0 - (m - 3))

    def test_exhaustive_minimum_is_target(self):
        target = (2, 0, 1, 1, 0, 2)
        X = exhaustive_optimum(cutoff_motif_landscape(target, 3, threshold=3))
        np.testing.assert_array_equal(X, [target])

    def test_threshold_range(self):
        with pytest.raises(InvalidInputError):
            cutoff_motif_landscape((0, 1), 2, threshold=3)


class TestWeightedHamming:
    def test_examples(self):
        target = (0, 1, 2, 3)
        assert weighted_hamming_landscape(target, 4)(target)[0] == 0.0
        assert weighted_hamming_landscape(target, 4)((1, 1, 1, 1))[0] == 3.0
        bb = weighted_hamming_landscape(target, 4, [1.0, 2.0, 0.5, 4.0])
        assert bb((0, 0, 0, 0))[0] == 6.5

    def test_unique_minimum(self):
        target = (1, 0, 2, 2, 1)
        X = exhaustive_optimum(weighted_hamming_landscape(target, 3, [0.5, 1, 2, 1, 3]))
        np.testing.assert_array_equal(X, [target])

    def test_zero_weight_ties(self):
        X = exhaustive_optimum(weighted_hamming_landscape((1, 0, 2), 3, [1, 0, 1]))
        assert len(X) == 3

    def test_negative_weights(self):
        with pytest.raises(InvalidInputError):
            weighted_hamming_landscape((0, 1), 2, [1.0, -1.0])


class TestTwoObjective:
    def test_target_vector(self):
        a, b = (0, 0, 1, 2, 2), (1, 0, 1, 0, 0)
        bb = two_objective_landscape(a, b, 3)
        np.testing.assert_array_equal(bb(a), [0, -hamming(a, b)])

    def test_same_targets(self):
        t = (0, 1, 2, 0, 1)
        np.testing.assert_array_equal(exhaustive_optimum(two_objective_landscape(t, t, 3)), [t])

    def test_front_matches_pairwise_oracle(self):
        a, b = (0, 0, 0, 1, 2), (2, 1, 0, 0, 1)
        bb = two_objective_landscape(a, b, 3)
        X, Y = exhaustive_values(bb)
        dominated = np.array([np.any(np.all(Y >= y, axis=1) & np.any(Y > y, axis=1)) for y in Y])
        want = {tuple(x) for x in X[~dominated]}
        got = {tuple(x) for x in exhaustive_optimum(bb)}
        assert got == want
        # every front member sits on a shortest mutation path between the targets
        for x in got:
            assert hamming(x, a) + hamming(x, b) == hamming(a, b)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            two_objective_landscape((0, 1), (0, 1, 1), 2)


class TestBlackBoxContract:
    def test_deterministic(self, rng):
        bb = cutoff_motif_landscape((0,) * 8, 4, threshold=3)
        X = rng.integers(0, 4, size=(50, 8))
        np.testing.assert_array_equal(bb.evaluate_batch(X), bb.evaluate_batch(X))

    def test_rejects_bad_input(self):
        bb = weighted_hamming_landscape((0, 1, 2), 3)
        with pytest.raises(DimensionError):
            bb.evaluate_batch([[0, 1]])
        with pytest.raises(InvalidInputError):
            bb.evaluate_batch([[0, 1, 3]])


class TestMetered:
    def test_zero_budget(self):
        m = metered(weighted_hamming_landscape((0, 1), 2), 0)
        with pytest.raises(BudgetExhausted):
            m((0, 1))

    def test_budget_180(self):
        m = metered(weighted_hamming_landscape((0, 1, 2), 3), 180)
        for i in range(180):
            m((i % 3, 0, 0))
        assert m.counter == 180
        with pytest.raises(BudgetExhausted):
            m((0, 0, 0))
        assert m.counter == 180

    def test_over_budget_never_calls_inner(self):
        calls = []
        bb = weighted_hamming_landscape((0, 1), 2)
        inner = bb.batch_fn
        bb.batch_fn = lambda X: calls.append(len(X)) or inner(X)
        m = metered(bb, 3)
        m.evaluate_batch([[0, 0], [1, 1]])
        with pytest.raises(BudgetExhausted):
            m.evaluate_batch([[0, 0], [1, 1]])
        assert calls == [2]
        assert m.remaining == 1

    def test_unlimited(self):
        m = metered(weighted_hamming_landscape((0, 1), 2), None)
        m.evaluate_batch(np.zeros((1000, 2), dtype=int))
        assert m.counter == 1000 and m.remaining is None

    def test_negative_budget(self):
        with pytest.raises(InvalidInputError):
            metered(weighted_hamming_landscape((0, 1), 2), -1)

    def test_thread_safe(self):
        m = metered(weighted_hamming_landscape((0, 1, 2), 3), 500)
        ok = []
        lock = threading.Lock()

        def worker():
            for _ in range(100):
                try:
                    m((0, 1, 2))
                except BudgetExhausted:
                    continue
                with lock:
                    ok.append(1)

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert m.counter == len(ok) == 500
