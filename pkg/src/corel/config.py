"""Experiment configuration: YAML schema, validation and problem construction.

Every section is optional except ``problem``. Unknown keys are rejected so
typos surface as configuration errors naming the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from corel.acquisition import ACQ_KINDS, AcqSpec
from corel.blackbox import (
    BlackBox,
    cutoff_motif_landscape,
    two_objective_landscape,
    weighted_hamming_landscape,
)
from corel.boloop import LOOP_VARIANTS, LoopConfig, PriorBundle
from corel.distributions import Alphabet
from corel.errors import ConfigError, CorelError
from corel.gp import EvidenceSearch
from corel.kernels import VARIANTS, KernelParams, KernelSpec
from corel.optimizers import ProposalBudget
from corel.priors import (
    WEIGHTING_DIRECTIONS,
    ProfileModel,
    ToyDecoder,
    consensus_scale,
    profile_from_sequences,
    read_corpus,
    weighting_from_profile,
)

LANDSCAPES = ("cutoff_motif", "weighted_hamming", "two_objective")
PRIOR_SOURCES = ("near_target", "initial", "corpus", "profile", "uniform")

SCHEMA: dict[str, dict[str, Any]] = {
    "problem": {
        "alphabet": None,
        "gap": None,
        "length": None,
        "landscape": "cutoff_motif",
        "target": None,
        "target_b": None,
        "threshold": None,
        "base": 0.0,
        "slope": 1.0,
        "position_weights": None,
        "initial": None,
    },
    "prior": {
        "source": "near_target",
        "path": None,
        "size": 5,
        "mutations": 4,
        "pseudocount": 1.0,
        "weighting": "proportional",
        "scale": "consensus",
        "per_sequence": False,
    },
    "kernel": {"variant": "weighted-hellinger", "theta": 1.0, "lambda": 1.0},
    "model": {"lambda_bounds": [1e-3, 1e3], "noise_bounds": [1e-8, 10.0], "grid": [25, 13]},
    "acquisition": {"kind": "EI", "kappa": 2.0, "mc_samples": 1000, "xi": 0.0},
    "optimizer": {"variant": "parameterized", "max_acq_evals": 300, "restarts": 3, "sample_budget": 64, "latent_dim": 4},
    "loop": {"t_max": 10, "batch_size": 1, "eval_budget": None},
    "baseline": {"iterations": None},
}
TOP_LEVEL = ("seed", "output_dir", *SCHEMA)


@dataclass
class ExperimentConfig:
    sections: dict
    seed: int = 0
    output_dir: str = "runs"
    source: Path | None = None

    def __getitem__(self, key):
        return self.sections[key]

    @property
    def base_dir(self) -> Path:
        return self.source.parent if self.source is not None else Path.cwd()

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _merge(raw: dict) -> dict:
    sections = {}
    for name, defaults in SCHEMA.items():
        given = raw.get(name) or {}
        if not isinstance(given, dict):
            raise ConfigError(name, "must be a mapping")
        for key in given:
            if key not in defaults:
                raise ConfigError(f"{name}.{key}", "unknown key")
        sections[name] = {**defaults, **given}
    return sections


def _positive_int(value, field_name, allow_zero=False):
    if not isinstance(value, int) or isinstance(value, bool) or value < (0 if allow_zero else 1):
        raise ConfigError(field_name, f"expected a {'nonnegative' if allow_zero else 'positive'} integer, got {value!r}")
    return value


def _choice(value, options, field_name):
    if value not in options:
        raise ConfigError(field_name, f"{value!r} is not one of {list(options)}")
    return value


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}") from None
    return parse_config(raw, seed=seed, source=path)


def parse_config(raw: dict, seed: int | None = None, source: Path | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    for key in raw:
        if key not in TOP_LEVEL:
            raise ConfigError(key, "unknown section")
    if "problem" not in raw:
        raise ConfigError("problem", "section is required")
    sections = _merge(raw)
    cfg = ExperimentConfig(sections, int(raw.get("seed", 0)), str(raw.get("output_dir", "runs")), source)
    if seed is not None:
        cfg.seed = seed
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    pb = cfg["problem"]
    if not isinstance(pb["alphabet"], str) or len(set(pb["alphabet"])) < 2:
        raise ConfigError("problem.alphabet", "expected a string of at least two distinct tokens")
    if len(set(pb["alphabet"])) != len(pb["alphabet"]):
        raise ConfigError("problem.alphabet", "tokens must be distinct")
    _positive_int(pb["length"], "problem.length")
    _choice(pb["landscape"], LANDSCAPES, "problem.landscape")
    if pb["landscape"] == "cutoff_motif":
        if pb["threshold"] is None:
            raise ConfigError("problem.threshold", "required for the cutoff_motif landscape")
        _positive_int(pb["threshold"], "problem.threshold", allow_zero=True)
        if pb["threshold"] > pb["length"]:
            raise ConfigError("problem.threshold", "must not exceed problem.length")
    for key in ("target", "target_b"):
        if pb[key] is not None and (not isinstance(pb[key], str) or len(pb[key]) != pb["length"]):
            raise ConfigError(f"problem.{key}", f"expected a token string of length {pb['length']}")
    initial = pb["initial"] or {}
    if not isinstance(initial, dict):
        raise ConfigError("problem.initial", "must be a mapping")
    if "sequences" not in initial:
        _choice(initial.get("kind", "random"), ("random", "perturbed_targets"), "problem.initial.kind")

    pr = cfg["prior"]
    _choice(pr["source"], PRIOR_SOURCES, "prior.source")
    if pr["source"] in ("corpus", "profile"):
        if pr["path"] is None:
            raise ConfigError("prior.path", f"required for source {pr['source']!r}")
        if not cfg.resolve(pr["path"]).exists():
            raise ConfigError("prior.path", f"file {pr['path']} does not exist")
    _choice(pr["weighting"], WEIGHTING_DIRECTIONS, "prior.weighting")
    if not (pr["scale"] == "consensus" or (isinstance(pr["scale"], (int, float)) and pr["scale"] > 0)):
        raise ConfigError("prior.scale", "expected a positive number or 'consensus'")
    if not (isinstance(pr["pseudocount"], (int, float)) and pr["pseudocount"] > 0):
        raise ConfigError("prior.pseudocount", "must be positive")

    kn = cfg["kernel"]
    _choice(kn["variant"], VARIANTS, "kernel.variant")
    for key in ("theta", "lambda"):
        if not (isinstance(kn[key], (int, float)) and kn[key] > 0):
            raise ConfigError(f"kernel.{key}", "must be positive")

    md = cfg["model"]
    for key in ("lambda_bounds", "noise_bounds"):
        lo_hi = md[key]
        if not (isinstance(lo_hi, (list, tuple)) and len(lo_hi) == 2 and 0 < lo_hi[0] < lo_hi[1]):
            raise ConfigError(f"model.{key}", "expected [low, high] with 0 < low < high")
    if not (isinstance(md["grid"], (list, tuple)) and len(md["grid"]) == 2 and all(int(g) >= 2 for g in md["grid"])):
        raise ConfigError("model.grid", "expected two grid sizes >= 2")

    ac = cfg["acquisition"]
    _choice(ac["kind"], ACQ_KINDS, "acquisition.kind")
    if pb["landscape"] == "two_objective" and ac["kind"] != "EHVI":
        raise ConfigError("acquisition.kind", "two-objective problems need EHVI")
    if pb["landscape"] != "two_objective" and ac["kind"] == "EHVI":
        raise ConfigError("acquisition.kind", "EHVI needs a two-objective landscape")
    if not ac["kappa"] >= 0:
        raise ConfigError("acquisition.kappa", "must be >= 0")
    _positive_int(ac["mc_samples"], "acquisition.mc_samples")

    op = cfg["optimizer"]
    _choice(op["variant"], LOOP_VARIANTS, "optimizer.variant")
    for key in ("max_acq_evals", "restarts", "latent_dim"):
        _positive_int(op[key], f"optimizer.{key}")
    _positive_int(op["sample_budget"], "optimizer.sample_budget", allow_zero=True)

    lp = cfg["loop"]
    _positive_int(lp["t_max"], "loop.t_max")
    _positive_int(lp["batch_size"], "loop.batch_size")
    if lp["eval_budget"] is not None:
        _positive_int(lp["eval_budget"], "loop.eval_budget")
        if lp["t_max"] * lp["batch_size"] > lp["eval_budget"]:
            raise ConfigError("loop.t_max", "t_max * batch_size exceeds loop.eval_budget")
    if cfg["baseline"]["iterations"] is not None:
        _positive_int(cfg["baseline"]["iterations"], "baseline.iterations")


@dataclass
class Experiment:
    """A fully built problem instance for one seed."""

    alphabet: Alphabet
    blackbox: BlackBox
    prior: PriorBundle
    initial: list
    loop: LoopConfig
    corpus: list = field(default_factory=list)


def _mutant(seq, k, tokens, rng) -> tuple:
    child = list(seq)
    for l in rng.choice(len(seq), size=k, replace=False):
        child[l] = int(rng.choice(tokens[tokens != child[l]]))
    return tuple(child)


def _weighting(profile: ProfileModel, pr: dict) -> np.ndarray:
    scale = consensus_scale(profile, pr["weighting"]) if pr["scale"] == "consensus" else float(pr["scale"])
    return weighting_from_profile(profile, scale, pr["weighting"])


def build_experiment(cfg: ExperimentConfig, seed: int | None = None) -> Experiment:
    """Construct black box, prior, initial sequences and loop settings.

    Problem randomness (targets, initial sequences, synthetic corpus, decoder)
    comes from one stream of ``seed`` so a baseline sharing the seed sees the
    same problem.
    """
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    pb, pr = cfg["problem"], cfg["prior"]
    alphabet = Alphabet.from_string(pb["alphabet"], gap=pb["gap"])
    A, L = alphabet.size, pb["length"]
    tokens = alphabet.mutable_tokens

    def sequence_or_random(key):
        if pb[key] is not None:
            try:
                return alphabet.encode(pb[key])
            except CorelError as exc:
                raise ConfigError(f"problem.{key}", str(exc)) from None
        return tuple(int(t) for t in rng.choice(tokens, size=L))

    target = sequence_or_random("target")
    if pb["landscape"] == "cutoff_motif":
        bb = cutoff_motif_landscape(target, A, pb["threshold"], pb["base"], pb["slope"])
    elif pb["landscape"] == "weighted_hamming":
        bb = weighted_hamming_landscape(target, A, pb["position_weights"])
    else:
        bb = two_objective_landscape(target, sequence_or_random("target_b"), A)

    initial_cfg = pb["initial"] or {}
    if "sequences" in initial_cfg:
        try:
            initial = [alphabet.encode(s) for s in initial_cfg["sequences"]]
        except CorelError as exc:
            raise ConfigError("problem.initial.sequences", str(exc)) from None
        if any(len(s) != L for s in initial):
            raise ConfigError("problem.initial.sequences", f"every sequence must have length {L}")
    elif initial_cfg.get("kind", "random") == "random":
        count = _positive_int(initial_cfg.get("count", 3), "problem.initial.count")
        initial = [tuple(int(t) for t in rng.choice(tokens, size=L)) for _ in range(count)]
    else:
        k = _positive_int(initial_cfg.get("mutations", 2), "problem.initial.mutations")
        targets = [bb.params["target_a"], bb.params["target_b"]] if bb.n_objectives == 2 else [target]
        initial = [_mutant(t, k, tokens, rng) for t in targets]

    source = pr["source"]
    corpus: list = []
    profile = None
    if source == "near_target":
        corpus = [_mutant(target, pr["mutations"], tokens, rng) for _ in range(pr["size"])]
    elif source == "initial":
        corpus = list(initial)
    elif source == "corpus":
        corpus = read_corpus(cfg.resolve(pr["path"]), alphabet)
        if any(len(s) != L for s in corpus):
            raise ConfigError("prior.path", f"corpus sequences must have length {L}")
    elif source == "profile":
        profile = ProfileModel.load(cfg.resolve(pr["path"]))
        if profile.shape != (L, A):
            raise ConfigError("prior.path", f"profile shape {profile.shape} does not match ({L}, {A})")
    if corpus:
        profile = profile_from_sequences(corpus, A, pr["pseudocount"])

    kn = cfg["kernel"]
    params = KernelParams(float(kn["theta"]), float(kn["lambda"]))
    if kn["variant"] == "plain-hellinger":
        weightings = ()
    elif profile is None:
        raise ConfigError("prior.source", f"kernel {kn['variant']!r} needs a profile; 'uniform' gives none")
    elif kn["variant"] == "product-of-weightings" and pr["per_sequence"]:
        if not corpus:
            raise ConfigError("prior.per_sequence", "needs a sequence corpus")
        weightings = tuple(_weighting(profile_from_sequences([s], A, pr["pseudocount"]), pr) for s in corpus)
    else:
        weightings = (_weighting(profile, pr),)
    kernel = KernelSpec(kn["variant"], weightings, params)

    op = cfg["optimizer"]
    center = profile.probs if profile is not None else None
    decoder = ToyDecoder.random(L, A, op["latent_dim"], seed=int(rng.integers(2**31)), center=center)
    prior = PriorBundle(kernel, profile, decoder, tokens)

    md, ac, lp = cfg["model"], cfg["acquisition"], cfg["loop"]
    loop = LoopConfig(
        variant=op["variant"],
        t_max=lp["t_max"],
        batch_size=lp["batch_size"],
        acq=AcqSpec(ac["kind"], float(ac["kappa"]), int(ac["mc_samples"]), float(ac["xi"])),
        budgets=ProposalBudget(op["max_acq_evals"], op["restarts"], op["sample_budget"]),
        eval_budget=lp["eval_budget"],
        search=EvidenceSearch(tuple(md["lambda_bounds"]), tuple(md["noise_bounds"]), tuple(int(g) for g in md["grid"])),
    )
    return Experiment(alphabet, bb, prior, initial, loop, corpus)


def run_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for a run component (1 = CoRel, 2 = baseline)."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))
