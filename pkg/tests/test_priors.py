import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corel.distributions import Alphabet, random_distribution
from corel.errors import InvalidCorpusError, InvalidInputError
from corel.kernels import KernelParams, KernelSpec, kernel_eval
from corel.priors import (
    ProfileModel,
    ToyDecoder,
    consensus_scale,
    profile_from_sequences,
    read_corpus,
    weighting_from_profile,
)


class TestProfile:
    def test_two_sequence_example(self):
        model = profile_from_sequences([(0, 0), (1, 0)], 2, pseudocount=1.0)
        np.testing.assert_allclose(model.probs, [[0.5, 0.5], [0.75, 0.25]])

    def test_small_pseudocount_approaches_frequencies(self):
        seqs = [(0, 1, 2), (0, 1, 1), (2, 1, 0), (0, 0, 0)]
        model = profile_from_sequences(seqs, 3, pseudocount=1e-9)
        counts = np.zeros((3, 3))
        for s in seqs:
            counts[np.arange(3), s] += 1
        np.testing.assert_allclose(model.probs, counts / 4, atol=1e-8)

    @settings(max_examples=50)
    @given(st.lists(st.lists(st.integers(0, 3), min_size=4, max_size=4), min_size=1, max_size=12), st.randoms())
    def test_permutation_invariant_and_stochastic(self, seqs, rnd):
        shuffled = list(seqs)
        rnd.shuffle(shuffled)
        a = profile_from_sequences(seqs, 4).probs
        b = profile_from_sequences(shuffled, 4).probs
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(a.sum(axis=1), 1.0)
        assert np.all(a > 0)

    def test_empty_corpus(self):
        with pytest.raises(InvalidCorpusError):
            profile_from_sequences([], 4)

    def test_bad_pseudocount(self):
        with pytest.raises(InvalidInputError):
            profile_from_sequences([(0,)], 2, pseudocount=0.0)

    def test_save_load_roundtrip(self, tmp_path, rng):
        model = ProfileModel(random_distribution(5, 4, rng), pseudocount=0.5)
        model.save(tmp_path / "profile.json", Alphabet.from_string("ACGT"))
        back = ProfileModel.load(tmp_path / "profile.json")
        np.testing.assert_array_equal(back.probs, model.probs)
        assert back.pseudocount == 0.5

    def test_log_likelihood_and_consensus(self):
        model = ProfileModel(np.array([[0.7, 0.3], [0.2, 0.8]]))
        assert model.log_likelihood([(0, 1)])[0] == pytest.approx(np.log(0.56))
        assert model.consensus() == (0, 1)


class TestCorpus:
    def test_gap_padding(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("# aligned\nACGT\nAC\n\nA\n")
        alphabet = Alphabet.from_string("ACGT", gap="-")
        seqs = read_corpus(path, alphabet)
        assert [alphabet.decode(s) for s in seqs] == ["ACGT", "AC--", "A---"]

    def test_ragged_without_gap(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("ACGT\nAC\n")
        with pytest.raises(InvalidCorpusError, match=":2:"):
            read_corpus(path, Alphabet.from_string("ACGT"))

    def test_bad_token_names_line(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("ACGT\nACGT\nACXT\n")
        with pytest.raises(InvalidCorpusError, match=":3:"):
            read_corpus(path, Alphabet.from_string("ACGT"))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("# nothing\n")
        with pytest.raises(InvalidCorpusError):
            read_corpus(path, Alphabet.from_string("ACGT"))


class TestWeighting:
    def test_unit_scale_is_profile(self, rng):
        model = ProfileModel(random_distribution(4, 3, rng))
        np.testing.assert_array_equal(weighting_from_profile(model), model.probs)

    def test_uniform_profile_scaled_by_alphabet_is_all_ones(self):
        model = ProfileModel(np.full((6, 4), 0.25))
        for direction in ("proportional", "inverse"):
            np.testing.assert_allclose(weighting_from_profile(model, 4.0, direction), 1.0)

    def test_uniform_weighting_reduces_to_plain_kernel(self, rng):
        model = ProfileModel(np.full((3, 4), 0.25))
        w = weighting_from_profile(model, 4.0)
        params = KernelParams(1.3, 0.7)
        plain = KernelSpec("plain-hellinger", params=params)
        weighted = KernelSpec("weighted-hellinger", (w,), params)
        for _ in range(20):
            p, q = random_distribution(3, 4, rng), random_distribution(3, 4, rng)
            assert kernel_eval(weighted, p, q) == pytest.approx(kernel_eval(plain, p, q), rel=1e-10)

    def test_order_within_rows(self, rng):
        model = ProfileModel(random_distribution(5, 4, rng))
        prop = weighting_from_profile(model, 2.0, "proportional")
        inv = weighting_from_profile(model, 2.0, "inverse")
        for l in range(5):
            order = np.argsort(model.probs[l])
            assert np.all(np.diff(prop[l, order]) >= 0)
            assert np.all(np.diff(inv[l, order]) <= 0)

    def test_invalid_arguments(self):
        model = ProfileModel(np.full((2, 2), 0.5))
        with pytest.raises(InvalidInputError):
            weighting_from_profile(model, 0.0)
        with pytest.raises(InvalidInputError):
            weighting_from_profile(model, 1.0, "sideways")

    def test_consensus_scale(self, rng):
        model = ProfileModel(random_distribution(6, 4, rng))
        w = weighting_from_profile(model, consensus_scale(model))
        assert np.prod(w.max(axis=1)) == pytest.approx(1.0)


def _kernel_gradient(dec: ToyDecoder, z, q, spec: KernelSpec):
    """d/dz of kernel_eval(spec, decode(z), q) for the plain kernel, by hand."""
    P = dec.decode(z)
    bc = np.sum(np.sqrt(P * q), axis=1)
    r = np.sqrt(max(1.0 - np.prod(bc), 0.0))
    k = spec.theta * np.exp(-spec.lam * r)
    others = np.array([np.prod(np.delete(bc, l)) for l in range(len(bc))])
    d_r2_dP = -others[:, None] * 0.5 * np.sqrt(q / P)
    d_k_dP = k * -spec.lam * d_r2_dP / (2 * r)
    # softmax Jacobian per row, then through the affine logits
    g_logits = P * (d_k_dP - np.sum(d_k_dP * P, axis=1, keepdims=True))
    return np.einsum("la,lad->d", g_logits, dec.weights)


class TestDecoder:
    def test_zero_weights_give_uniform(self):
        dec = ToyDecoder(np.zeros((4, 5, 3)), np.zeros((4, 5)))
        np.testing.assert_allclose(dec.decode(np.array([3.0, -1.0, 2.0])), 0.2)

    def test_rows_sum_to_one(self, rng):
        dec = ToyDecoder.random(6, 4, 3, seed=1)
        Z = rng.normal(scale=5.0, size=(1000, 3))
        sums = np.array([dec.decode(z).sum(axis=1) for z in Z])
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_center(self, rng):
        center = random_distribution(3, 4, rng)
        dec = ToyDecoder.random(3, 4, 2, seed=0, center=center)
        np.testing.assert_allclose(dec.decode(np.zeros(2)), center, atol=1e-12)

    def test_seeded(self):
        a = ToyDecoder.random(3, 4, 2, seed=9)
        b = ToyDecoder.random(3, 4, 2, seed=9)
        np.testing.assert_array_equal(a.weights, b.weights)

    @pytest.mark.parametrize("z", [np.array([np.nan, 0.0]), np.array([np.inf, 0.0]), np.zeros(3)])
    def test_rejects_bad_latent(self, z):
        with pytest.raises(InvalidInputError):
            ToyDecoder.random(3, 4, 2).decode(z)

    @pytest.mark.parametrize("seed", range(5))
    def test_directional_derivative(self, seed):
        rng = np.random.default_rng(seed)
        dec = ToyDecoder.random(4, 3, 3, seed=seed)
        q = random_distribution(4, 3, rng)
        spec = KernelSpec("plain-hellinger", params=KernelParams(1.5, 2.0))
        z = rng.normal(size=3)
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        h = 1e-5
        numeric = (kernel_eval(spec, dec.decode(z + h * u), q) - kernel_eval(spec, dec.decode(z - h * u), q)) / (2 * h)
        analytic = _kernel_gradient(dec, z, q, spec) @ u
        assert numeric == pytest.approx(analytic, rel=1e-4, abs=1e-10)

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1))
    def test_kernel_lipschitz_in_hellinger_distance(self, seed):
        rng = np.random.default_rng(seed)
        spec = KernelSpec("plain-hellinger", params=KernelParams(1.2, 3.0))
        p, q, x = (random_distribution(3, 4, rng, 0.5) for _ in range(3))
        r_pq = np.log(kernel_eval(spec, p, q) / spec.theta) / -spec.lam
        gap = abs(kernel_eval(spec, p, x) - kernel_eval(spec, q, x))
        assert gap <= spec.theta * spec.lam * r_pq + 1e-12
