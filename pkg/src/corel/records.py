"""Serialization of run records: iteration logs, summaries and plot data."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from corel.boloop import RunRecord
from corel.distributions import Alphabet

HYPER_KEYS = ("mu", "theta", "lambda", "sigma_sq")


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "nan" if np.isnan(x) else repr(x)


def iteration_log(run: RunRecord, alphabet: Alphabet) -> str:
    """One comma-separated row per evaluated proposal (no wall-clock fields)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    objectives = [f"objective_{j + 1}" for j in range(run.n_objectives)]
    tracked = "relative_hypervolume" if run.n_objectives == 2 else "incumbent"
    writer.writerow(["iteration", "eval_count", "proposed_sequence", *objectives, tracked, *HYPER_KEYS, "acq_value"])
    for count, (seq, y) in enumerate(zip(run.dataset.sequences[: run.initial_count], run.dataset.Y[: run.initial_count]), 1):
        writer.writerow([0, count, alphabet.decode(seq), *map(_num, y), _num(run.initial_incumbent), *[""] * 4, ""])
    count = run.initial_count
    for it in run.iterations:
        hyper = [";".join(_num(h.get(k)) for h in it.hyper) if it.hyper else "" for k in HYPER_KEYS]
        acq = it.acq_values or [None] * len(it.proposals)
        for seq, y, a in zip(it.proposals, it.values, acq):
            count += 1
            writer.writerow([it.iteration, count, alphabet.decode(seq), *map(_num, y), _num(it.incumbent), *hyper, _num(a)])
    return buf.getvalue()


def curve_csv(run: RunRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    tracked = "relative_hypervolume" if run.n_objectives == 2 else "best_so_far"
    writer.writerow(["eval_count", tracked])
    for n, v in run.curve():
        writer.writerow([n, _num(v)])
    return buf.getvalue()


def summary(run: RunRecord, alphabet: Alphabet, seed: int) -> dict:
    out = {
        "method": run.method,
        "seed": seed,
        "n_objectives": run.n_objectives,
        "iterations": len(run.iterations),
        "eval_count": run.dataset.eval_count,
        "initial": run.initial_incumbent,
        "final": run.final,
        "note": run.note,
    }
    if run.n_objectives == 1:
        y = run.dataset.Y[:, 0]
        best = int(np.argmin(y) if run.minimize else np.argmax(y))
        out["best_sequence"] = alphabet.decode(run.dataset.sequences[best])
        out["best_value"] = float(y[best])
    else:
        out["ref_point"] = [float(v) for v in run.ref_point]
    return out


def timing(run: RunRecord) -> list[float]:
    return [it.seconds for it in run.iterations]


def aggregate_csv(curves: dict[str, list[list[tuple[int, float]]]]) -> str:
    """Mean and standard error across seeds, aligned by iteration index."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "step", "eval_count", "mean", "stderr", "n_seeds"])
    for method, runs in curves.items():
        steps = max(len(c) for c in runs)
        for k in range(steps):
            pts = [c[k] for c in runs if len(c) > k]
            vals = np.array([v for _, v in pts])
            evals = np.mean([n for n, _ in pts])
            se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
            writer.writerow([method, k, _num(evals), _num(vals.mean()), _num(se), len(vals)])
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
