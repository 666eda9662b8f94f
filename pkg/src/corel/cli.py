"""Command-line front end: ``corel run``, ``corel verify``, ``corel kernel-matrix``.

Exit codes: 0 success, 1 verification failure, 2 configuration or input error.
Set ``COREL_LOG`` (e.g. ``DEBUG``, ``INFO``) to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from corel import records
from corel.boloop import POPULATION, random_mutation_baseline, run_bo
from corel.config import build_experiment, load_config, run_rng
from corel.distributions import indicators
from corel.errors import ConfigError, CorelError
from corel.kernels import gram_matrix

logger = logging.getLogger("corel")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

def _run_one(cfg, seed: int, out_dir: Path, baseline: str | None) -> dict:
    exp = build_experiment(cfg, seed)
    runs = {"corel": run_bo(exp.loop, exp.blackbox, exp.prior, exp.initial, run_rng(seed, 1))}
    if baseline == "random-mutation":
        budget = exp.loop.eval_budget
        iterations = cfg["baseline"]["iterations"]
        if iterations is None:
            total = budget if budget is not None else exp.loop.t_max * exp.loop.batch_size
            iterations = max(1, total // POPULATION)
        runs["random-mutation"] = random_mutation_baseline(
            exp.initial, exp.blackbox, iterations, run_rng(seed, 2), exp.prior.allowed_tokens, budget
        )
    meta = {"seed": seed, "finished": datetime.now(timezone.utc).isoformat(), "seconds": {}}
    for name, run in runs.items():
        prefix = "" if name == "corel" else "baseline_"
        records.write_atomic(out_dir / f"{prefix}iterations.csv", records.iteration_log(run, exp.alphabet))
        records.write_atomic(out_dir / f"{prefix}curve.csv", records.curve_csv(run))
        records.write_atomic(out_dir / f"{prefix}summary.json", records.dump_json(records.summary(run, exp.alphabet, seed)))
        meta["seconds"][name] = records.timing(run)
        if run.note:
            print(f"seed {seed} {name}: {run.note}", file=sys.stderr)
    records.write_atomic(out_dir / "metadata.json", records.dump_json(meta))
    return {name: run.curve() for name, run in runs.items()}

def cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    out_root = Path(args.output) if args.output else cfg.resolve(cfg.output_dir)
    if args.seeds is None:
        _run_one(cfg, cfg.seed, out_root, args.baseline)
        print(f"wrote {out_root}")
        return EXIT_OK
    curves: dict[str, list] = {}
    for k in range(args.seeds):
        seed = cfg.seed + k
        for name, curve in _run_one(cfg, seed, out_root / f"seed_{seed}", args.baseline).items():
            curves.setdefault(name, []).append(curve)
    records.write_atomic(out_root / "aggregate.csv", records.aggregate_csv(curves))
    print(f"wrote {args.seeds} seeds to {out_root}")
    return EXIT_OK

def cmd_verify(args) -> int:
    from corel.verify import run_checks

    results = run_checks(args.level, seed=args.seed)
    failed = [name for name, ok, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK

def read_sequences(path, alphabet) -> list[tuple]:
    seqs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            seqs.append(alphabet.encode(line))
        except CorelError as exc:
            raise ConfigError(f"{path}:{lineno}", str(exc)) from None
    if not seqs:
        raise ConfigError(str(path), "no sequences")
    if len({len(s) for s in seqs}) != 1:
        raise ConfigError(str(path), "sequences differ in length; pad them with the gap token")
    return seqs

def cmd_kernel_matrix(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    exp = build_experiment(cfg)
    seqs = read_sequences(args.sequences, exp.alphabet)
    L = exp.blackbox.length
    if len(seqs[0]) != L:
        raise ConfigError(str(args.sequences), f"sequences have length {len(seqs[0])}, config expects {L}")
    spec = exp.prior.kernel
    G = gram_matrix(spec, indicators(seqs, exp.alphabet.size))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in G:
        writer.writerow([repr(float(v)) for v in row])
    out = Path(args.output)
    records.write_atomic(out, buf.getvalue())
    params = {"variant": spec.variant, "mu": 0.0, "theta": spec.theta, "lambda": spec.lam, "n": len(seqs)}
    records.write_atomic(out.with_name(out.name + ".json"), records.dump_json(params))
    print(f"wrote {len(seqs)}x{len(seqs)} matrix to {out}")
    return EXIT_OK

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--seeds", type=int, default=None, help="sweep this many consecutive seeds")
    run.add_argument("--baseline", choices=["random-mutation"], default=None)
    run.add_argument("--output", default=None, help="override output_dir")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="check formulas against brute-force oracles")
    ver.add_argument("--level", choices=["fast", "full"], default="fast")
    ver.add_argument("--seed", type=int, default=20240601)
    ver.set_defaults(func=cmd_verify)

    km = sub.add_parser("kernel-matrix", help="Gram matrix of the configured kernel over sequences")
    km.add_argument("config")
    km.add_argument("sequences")
    km.add_argument("output")
    km.add_argument("--seed", type=int, default=None)
    km.set_defaults(func=cmd_kernel_matrix)
    return parser

def main(argv=None) -> int:
    level = os.environ.get("COREL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CorelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
