"""Prior structure over sequences: position profiles, weightings and a toy decoder."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import softmax

from corel.distributions import Alphabet, check_distribution, check_sequence
from corel.errors import InvalidCorpusError, InvalidInputError

WEIGHTING_DIRECTIONS = ("proportional", "inverse")


@dataclass(frozen=True)
class ProfileModel:
    """Position-specific categorical model (match emissions of a profile HMM)."""

    probs: np.ndarray
    pseudocount: float = 1.0

    def __post_init__(self):
        probs = check_distribution(self.probs)
        if self.pseudocount <= 0:
            raise InvalidInputError("pseudocount must be positive")
        object.__setattr__(self, "probs", probs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def log_likelihood(self, seqs) -> np.ndarray:
        X = np.atleast_2d(np.asarray(seqs, dtype=int))
        return np.log(self.probs[np.arange(X.shape[1]), X]).sum(axis=1)

    def consensus(self) -> tuple:
        return tuple(int(i) for i in np.argmax(self.probs, axis=1))

    def save(self, path, alphabet: Alphabet | None = None) -> None:
        record = {
            "pseudocount": self.pseudocount,
            "alphabet": None if alphabet is None else "".join(alphabet.symbols),
            "probs": self.probs.tolist(),
        }
        Path(path).write_text(json.dumps(record, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "ProfileModel":
        record = json.loads(Path(path).read_text())
        return cls(np.asarray(record["probs"], dtype=float), float(record["pseudocount"]))


def profile_from_sequences(seqs, alphabet_size: int, pseudocount: float = 1.0) -> ProfileModel:
    """Laplace-smoothed per-position token frequencies of an aligned corpus."""
    seqs = list(seqs)
    if not seqs:
        raise InvalidCorpusError("cannot build a profile from an empty corpus")
    if pseudocount <= 0:
        raise InvalidInputError("pseudocount must be positive")
    X = np.asarray([check_sequence(s, alphabet_size) for s in seqs], dtype=int)
    if X.ndim != 2:
        raise InvalidCorpusError("corpus sequences must be padded to a common length")
    N, L = X.shape
    counts = np.zeros((L, alphabet_size))
    np.add.at(counts, (np.tile(np.arange(L), N), X.ravel()), 1.0)
    probs = (counts + pseudocount) / (N + alphabet_size * pseudocount)
    return ProfileModel(probs, pseudocount)


def read_corpus(path, alphabet: Alphabet) -> list[tuple]:
    """One token string per line; shorter lines are right-padded with the gap token."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidCorpusError(f"{path}: no sequences")
    width = max(len(ln) for ln in lines)
    seqs = []
    for lineno, ln in enumerate(lines, start=1):
        if len(ln) < width:
            if alphabet.gap is None:
                raise InvalidCorpusError(f"{path}:{lineno}: ragged corpus needs a gap token in the alphabet")
            ln = ln + alphabet.gap * (width - len(ln))
        try:
            seqs.append(alphabet.encode(ln))
        except ValueError as exc:
            raise InvalidCorpusError(f"{path}:{lineno}: {exc}") from None
    return seqs


def weighting_from_profile(model: ProfileModel, scale: float = 1.0, direction: str = "proportional") -> np.ndarray:
    """Per-position weighting derived from a profile.

    ``proportional`` gives ``scale * probs``. ``inverse`` gives each row
    weights proportional to ``1 / probs``, normalized so a uniform profile
    yields the same weighting in both directions.
    """
    if not scale > 0:
        raise InvalidInputError("scale must be positive")
    if direction == "proportional":
        return scale * model.probs
    if direction == "inverse":
        inv = 1.0 / model.probs
        return scale * inv / inv.sum(axis=1, keepdims=True)
    raise InvalidInputError(f"unknown weighting direction {direction!r}; choose from {WEIGHTING_DIRECTIONS}")


def consensus_scale(model: ProfileModel, direction: str = "proportional") -> float:
    """Scale at which the heaviest sequence has weight exactly 1."""
    w = weighting_from_profile(model, 1.0, direction)
    return float(np.exp(-np.mean(np.log(w.max(axis=1)))))


@dataclass(frozen=True)
class ToyDecoder:
    """Affine map from R^d to per-position logits followed by a row softmax.

    Stands in for a pretrained VAE decoder. ``weights`` has shape
    ``(L, A, d)`` and ``bias`` shape ``(L, A)``.
    """

    weights: np.ndarray
    bias: np.ndarray
    seed: int | None = None

    @classmethod
    def random(cls, length: int, alphabet_size: int, latent_dim: int, seed: int = 0, center=None) -> "ToyDecoder":
        """Seeded decoder; ``center`` (a distribution) becomes ``decode(0)``."""
        if latent_dim < 1:
            raise InvalidInputError("latent_dim must be >= 1")
        rng = np.random.default_rng(seed)
        W = rng.standard_normal((length, alphabet_size, latent_dim)) / np.sqrt(latent_dim)
        if center is None:
            b = np.zeros((length, alphabet_size))
        else:
            b = np.log(check_distribution(center))
        return cls(W, b, seed)

    @property
    def latent_dim(self) -> int:
        return self.weights.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape[:2]

    def decode(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.latent_dim,):
            raise InvalidInputError(f"latent vector must have shape ({self.latent_dim},), got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise InvalidInputError("latent vector must be finite")
        return softmax(self.weights @ z + self.bias, axis=1)


def decode(dec: ToyDecoder, z) -> np.ndarray:
    return dec.decode(z)
