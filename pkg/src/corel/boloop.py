"""Outer Bayesian-optimization loops and the random-mutation baseline."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from corel import gp
from corel.acquisition import (
    AcqSpec,
    ParetoState,
    ehvi_2d,
    expected_improvement,
    pareto_mask,
    relative_hypervolume,
    ucb_score,
)
from corel.blackbox import BlackBox, Metered
from corel.distributions import hamming, indicators, sample_sequences
from corel.errors import BudgetExhausted, InvalidInputError, UnfittableModelError
from corel.kernels import KernelSpec
from corel.optimizers import (
    ProposalBudget,
    batch_from_distribution,
    optimize_acq_continuous,
    optimize_acq_discrete,
)
from corel.priors import ProfileModel, ToyDecoder

logger = logging.getLogger(__name__)

LOOP_VARIANTS = ("parameterized", "continuous", "discrete")
POPULATION = 16


@dataclass(frozen=True)
class LoopConfig:
    variant: str = "parameterized"
    t_max: int = 10
    batch_size: int = 1
    acq: AcqSpec = field(default_factory=AcqSpec)
    budgets: ProposalBudget = field(default_factory=ProposalBudget)
    eval_budget: int | None = None
    search: gp.EvidenceSearch = field(default_factory=gp.EvidenceSearch)

    def __post_init__(self):
        if self.variant not in LOOP_VARIANTS:
            raise InvalidInputError(f"unknown loop variant {self.variant!r}; choose from {LOOP_VARIANTS}")
        if self.t_max < 1 or self.batch_size < 1:
            raise InvalidInputError("t_max and batch_size must be positive")
        if self.eval_budget is not None and self.t_max * self.batch_size > self.eval_budget:
            raise InvalidInputError(
                f"t_max * batch_size = {self.t_max * self.batch_size} exceeds the evaluation budget {self.eval_budget}"
            )


@dataclass
class PriorBundle:
    """Everything the loop knows about sequences before seeing data."""

    kernel: KernelSpec
    profile: ProfileModel | None = None
    decoder: ToyDecoder | None = None
    allowed_tokens: np.ndarray | None = None


@dataclass
class Dataset:
    sequences: list = field(default_factory=list)
    Y: np.ndarray = None
    eval_count: int = 0
    _index: set = field(default_factory=set, repr=False)

    def add(self, seqs, Y) -> None:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        self.eval_count += len(seqs)
        keep = []
        for i, s in enumerate(seqs):
            if s not in self._index:
                self._index.add(s)
                self.sequences.append(s)
                keep.append(i)
        rows = Y[keep]
        self.Y = rows if self.Y is None else np.vstack([self.Y, rows])

    def __contains__(self, seq) -> bool:
        return seq in self._index

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass
class IterationRecord:
    iteration: int
    eval_count: int
    proposals: list
    values: np.ndarray
    incumbent: float
    hyper: list = field(default_factory=list)
    acq_values: list = field(default_factory=list)
    seconds: float = 0.0
    note: str = ""
    parents: list = field(default_factory=list)


@dataclass
class RunRecord:
    method: str
    n_objectives: int
    minimize: bool
    dataset: Dataset
    initial_count: int
    iterations: list = field(default_factory=list)
    ref_point: np.ndarray | None = None
    initial_incumbent: float = float("nan")
    note: str = ""

    @property
    def incumbents(self) -> list[float]:
        return [it.incumbent for it in self.iterations]

    def curve(self) -> list[tuple[int, float]]:
        """(evaluations, best-so-far or relative hypervolume) after each iteration."""
        start = [(self.initial_count, self.initial_incumbent)]
        return start + [(it.eval_count, it.incumbent) for it in self.iterations]

    @property
    def final(self) -> float:
        return self.iterations[-1].incumbent if self.iterations else self.initial_incumbent


def _to_loss(Y: np.ndarray, minimize: bool) -> np.ndarray:
    return Y if minimize else -Y


def _to_gain(Y: np.ndarray, minimize: bool) -> np.ndarray:
    return -Y if minimize else Y


def _incumbent(dataset: Dataset, bb: BlackBox, state: ParetoState | None, initial_front) -> float:
    if bb.n_objectives == 1:
        y = dataset.Y[:, 0]
        return float(y.min() if bb.minimize else y.max())
    return relative_hypervolume(state, initial_front)


def _hyper(model: gp.GPModel) -> dict:
    return {
        "mu": model.mu,
        "theta": model.theta,
        "lambda": model.lam,
        "sigma_sq": model.sigma_sq,
        "evidence": model.evidence,
    }


def _mutate_until_new(seq: tuple, tokens: np.ndarray, taken, rng, positions: int = 1, tries: int = 1000) -> tuple:
    for _ in range(tries):
        child = list(seq)
        for l in rng.choice(len(seq), size=positions, replace=False):
            options = tokens[tokens != child[l]]
            child[l] = int(rng.choice(options))
        child = tuple(child)
        if child not in taken:
            return child
    return child


def _make_acquisition(models, spec: AcqSpec, targets: np.ndarray, state: ParetoState | None):
    if spec.kind == "EHVI":
        if len(models) != 2:
            raise InvalidInputError("EHVI needs two objectives")

        def acq(P):
            m0, v0 = models[0].posterior(P)
            m1, v1 = models[1].posterior(P)
            return ehvi_2d(np.stack([m0, m1], axis=1), np.stack([v0, v1], axis=1), state)

        return acq
    if len(models) != 1:
        raise InvalidInputError(f"{spec.kind} is single-objective; use EHVI for two objectives")
    model = models[0]
    best = float(targets[:, 0].min())
    if spec.kind == "EI":
        return lambda P: expected_improvement(*model.posterior(P), best, spec.xi)
    return lambda P: ucb_score(*model.posterior(P), spec.kappa)


def _fallback_batch(prior: PriorBundle, L: int, A: int, k: int, dataset: Dataset, rng) -> list[tuple]:
    P = prior.profile.probs if prior.profile is not None else np.full((L, A), 1.0 / A)
    out: list[tuple] = []
    for _ in range(100):
        for s in sample_sequences(P, max(k, 16), rng):
            s = tuple(int(t) for t in s)
            if s not in dataset and s not in out:
                out.append(s)
            if len(out) == k:
                return out
    return out


def _fill(proposals: list, ranked, k: int, dataset: Dataset, tokens, rng) -> list:
    """Top up ``proposals`` to ``k`` from ``ranked``, then by single mutations."""
    taken = set(proposals) | dataset._index
    for s in ranked:
        if len(proposals) >= k:
            break
        if s not in taken:
            proposals.append(s)
            taken.add(s)
    while len(proposals) < k:
        parent = proposals[-1] if proposals else dataset.sequences[int(rng.integers(len(dataset)))]
        child = _mutate_until_new(parent, tokens, taken, rng)
        proposals.append(child)
        taken.add(child)
    return proposals


def _discrete_batch(config: LoopConfig, acq, dataset: Dataset, targets, k, A, rng, state, tokens):
    """Top-``k`` unseen sequences visited by hill climbing, under one model fit."""
    if state is not None:
        seeds = [s for s, f in zip(dataset.sequences, pareto_mask(targets)) if f]
    else:
        order = np.argsort(targets[:, 0], kind="stable")
        seeds = [dataset.sequences[order[0]]]
        others = order[1:]
        if len(others):
            pick = rng.choice(others, size=min(4, len(others)), replace=False)
            seeds += [dataset.sequences[i] for i in pick]
    result = optimize_acq_discrete(acq, seeds, config.budgets, A, allowed_tokens=tokens, rng=rng)
    proposals = _fill([], result.ranked(), k, dataset, tokens, rng)
    return proposals, [result.visited.get(s, float("nan")) for s in proposals]


def _propose(config: LoopConfig, models, prior: PriorBundle, dataset: Dataset, targets, k: int, L: int, A: int, rng, state):
    tokens = prior.allowed_tokens if prior.allowed_tokens is not None else np.arange(A)
    b = config.budgets
    acq = _make_acquisition(models, config.acq, targets, state)
    if config.variant == "discrete":
        return _discrete_batch(config, acq, dataset, targets, k, A, rng, state, tokens)
    if config.variant == "parameterized":
        if prior.decoder is None:
            raise InvalidInputError("the parameterized variant needs a decoder")
        d = prior.decoder.latent_dim
        starts = [np.zeros(d)] + [rng.standard_normal(d) for _ in range(b.restarts - 1)]
        _, P_star, _ = optimize_acq_continuous(acq, prior.decoder.decode, starts, b)
    else:
        center = prior.profile.probs if prior.profile is not None else np.full((L, A), 1.0 / A)
        starts = [np.log(center).ravel()]
        order = np.argsort(targets[:, 0], kind="stable") if state is None else np.arange(len(dataset))
        for i in order[: b.restarts - 1]:
            smooth = 0.5 * indicators([dataset.sequences[i]], A)[0] + 0.5 * center
            starts.append(np.log(smooth).ravel())

        def decode(z):
            return softmax(z.reshape(L, A), axis=1)

        _, P_star, _ = optimize_acq_continuous(acq, decode, starts, b)

    seqs, vals = batch_from_distribution(P_star, acq, k, b.sample_budget, rng, exclude=dataset._index)
    proposals = _fill(list(seqs), [], k, dataset, tokens, rng)
    acq_vals = list(vals) + [float("nan")] * (len(proposals) - len(seqs))
    return proposals, acq_vals


def run_bo(
    config: LoopConfig,
    blackbox: BlackBox,
    prior: PriorBundle,
    initial_sequences,
    rng: np.random.Generator,
) -> RunRecord:
    """Run one CoRel optimization from an ice-cold start.

    The initial sequences are evaluated first; after that at most
    ``config.eval_budget`` further evaluations are spent.
    """
    L, A, M = blackbox.length, blackbox.alphabet_size, blackbox.n_objectives
    if M == 2 and config.acq.kind != "EHVI":
        raise InvalidInputError("two-objective problems need the EHVI acquisition")
    initial = list(dict.fromkeys(tuple(int(t) for t in s) for s in initial_sequences))
    if not initial:
        raise InvalidInputError("the initial dataset must not be empty")

    dataset = Dataset()
    dataset.add(initial, blackbox.evaluate_batch(initial))
    bb = Metered(blackbox, config.eval_budget)
    run = RunRecord("corel", M, blackbox.minimize, dataset, len(initial))

    state = initial_front = None
    if M == 2:
        gains0 = _to_gain(dataset.Y, blackbox.minimize)
        state = ParetoState.from_initial(gains0)
        initial_front = state.front
        run.ref_point = state.ref_point
    run.initial_incumbent = _incumbent(dataset, blackbox, state, initial_front)

    for t in range(1, config.t_max + 1):
        tick = time.perf_counter()
        k = config.batch_size if bb.remaining is None else min(config.batch_size, bb.remaining)
        if k <= 0:
            run.note = "evaluation budget exhausted"
            break
        targets = _to_gain(dataset.Y, blackbox.minimize) if M == 2 else _to_loss(dataset.Y, blackbox.minimize)
        note = ""
        X = indicators(dataset.sequences, A)
        try:
            models = [gp.fit(X, targets[:, j], prior.kernel, config.search) for j in range(M)]
        except UnfittableModelError as exc:
            logger.warning("iteration %d: %s; sampling from the prior instead", t, exc)
            models, note = [], "unfittable model; prior sampling"
        if models:
            proposals, acq_vals = _propose(config, models, prior, dataset, targets, k, L, A, rng, state)
        else:
            proposals = _fallback_batch(prior, L, A, k, dataset, rng)
            acq_vals = [float("nan")] * len(proposals)

        try:
            values = bb.evaluate_batch(proposals)
        except BudgetExhausted:
            run.note = "evaluation budget exhausted"
            break
        except Exception as exc:  # black-box failure: keep the partial trace
            logger.error("iteration %d: black box failed: %s", t, exc)
            run.note = f"black box failure: {exc}"
            break
        dataset.add(proposals, values)
        if state is not None:
            state.add(_to_gain(values, blackbox.minimize))
        record = IterationRecord(
            iteration=t,
            eval_count=dataset.eval_count,
            proposals=proposals,
            values=values,
            incumbent=_incumbent(dataset, blackbox, state, initial_front),
            hyper=[_hyper(m) for m in models],
            acq_values=[float(v) for v in acq_vals],
            seconds=time.perf_counter() - tick,
            note=note,
        )
        run.iterations.append(record)
        logger.info("iteration %d: evals=%d incumbent=%.6g", t, record.eval_count, record.incumbent)
    return run


def random_mutation_baseline(
    initial_sequences,
    blackbox: BlackBox,
    iterations: int,
    rng: np.random.Generator,
    allowed_tokens=None,
    eval_budget: int | None = None,
    population: int = POPULATION,
) -> RunRecord:
    """Mutate a population of front members at two random positions per iteration.

    The parents are the current Pareto front (two objectives) or the best
    ``population`` sequences (one objective), subsampled or padded with random
    repeats to exactly ``population``. Every child differs from its parent at
    exactly two positions and keeps its length; this is checked in-run.
    """
    L, A, M = blackbox.length, blackbox.alphabet_size, blackbox.n_objectives
    if L < 2:
        raise InvalidInputError("two-position mutations need sequences of length >= 2")
    tokens = np.arange(A) if allowed_tokens is None else np.asarray(allowed_tokens)
    initial = list(dict.fromkeys(tuple(int(t) for t in s) for s in initial_sequences))
    if not initial:
        raise InvalidInputError("the initial set must not be empty")
    dataset = Dataset()
    dataset.add(initial, blackbox.evaluate_batch(initial))
    run = RunRecord("random-mutation", M, blackbox.minimize, dataset, len(initial))
    state = initial_front = None
    if M == 2:
        state = ParetoState.from_initial(_to_gain(dataset.Y, blackbox.minimize))
        initial_front = state.front
        run.ref_point = state.ref_point
    run.initial_incumbent = _incumbent(dataset, blackbox, state, initial_front)
    if eval_budget is not None:
        iterations = min(iterations, eval_budget // population)

    for t in range(1, iterations + 1):
        tick = time.perf_counter()
        if M == 2:
            mask = pareto_mask(_to_gain(dataset.Y, blackbox.minimize))
            pool = [s for s, m in zip(dataset.sequences, mask) if m]
        else:
            order = np.argsort(_to_loss(dataset.Y, blackbox.minimize)[:, 0], kind="stable")
            pool = [dataset.sequences[i] for i in order[:population]]
        if len(pool) >= population:
            parents = [pool[i] for i in rng.choice(len(pool), size=population, replace=False)]
        else:
            pad = rng.choice(len(pool), size=population - len(pool), replace=True)
            parents = pool + [pool[i] for i in pad]

        taken = set(dataset._index)
        children = []
        for parent in parents:
            child = _mutate_until_new(parent, tokens, taken, rng, positions=2)
            taken.add(child)
            children.append(child)

        if len(children) != population:
            raise AssertionError(f"population size {len(children)} != {population}")
        for parent, child in zip(parents, children):
            if len(child) != len(parent) or hamming(parent, child) != 2:
                raise AssertionError(f"child {child} is not a 2-position mutant of {parent}")

        values = blackbox.evaluate_batch(children)
        dataset.add(children, values)
        if state is not None:
            state.add(_to_gain(values, blackbox.minimize))
        run.iterations.append(
            IterationRecord(
                iteration=t,
                eval_count=dataset.eval_count,
                proposals=children,
                values=values,
                incumbent=_incumbent(dataset, blackbox, state, initial_front),
                parents=parents,
                seconds=time.perf_counter() - tick,
            )
        )
    return run
