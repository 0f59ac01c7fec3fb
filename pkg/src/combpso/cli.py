"""Command-line entry point: gen-data, run, experiment, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .datasets import GENERATORS, MONKS_RULES, write_csv
from .forest import DegenerateTrainingError
from .harness import ALGORITHMS, ExperimentSpec
from .mo_engine import MORunResult
from .oracle import ORACLE_KINDS

# Built-in values for every option that a --config file may also set.
DEFAULTS = {
    "dataset": None,
    "n_total": 10,
    "seed": 0,
    "samples": None,
    "monks_rule": "printed",
    "algo": "so-combpso",
    "runs": 10,
    "base_seed": 0,
    "ntree": 100,
    "nodesize": 1,
    "oracle": "rf",
    "memoize": False,
    "stratify": True,
    "format": "json",
    "swarm_size": None,
    "iterations": None,
    "theta": None,
    "gamma": None,
    "alpha": None,
    "archive_capacity": None,
    "c1": None,
    "c2": None,
    "leader_metric": None,
    "dynamic_population": None,
    "turbulence": None,
}


class UsageError(ValueError):
    pass


def _data_opts(p):
    p.add_argument("--dataset", help=f"generator ({', '.join(GENERATORS)}) or CSV path")
    p.add_argument("--n-total", type=int, help="total feature count after noise expansion")
    p.add_argument("--samples", type=int, help="sample count for the synthetic generators")
    p.add_argument("--monks-rule", choices=MONKS_RULES)


def _engine_opts(p):
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--ntree", type=int)
    p.add_argument("--nodesize", type=int)
    p.add_argument("--oracle", choices=ORACLE_KINDS)
    p.add_argument("--memoize", action="store_true", default=None, help="cache oracle errors by mask")
    p.add_argument("--no-stratify", dest="stratify", action="store_false", default=None)
    p.add_argument("--swarm-size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--theta", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--archive-capacity", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--leader-metric", choices=("euclidean", "hamming"))
    p.add_argument("--no-dynamic-population", dest="dynamic_population", action="store_false", default=None)
    p.add_argument("--no-turbulence", dest="turbulence", action="store_false", default=None)
    p.add_argument("--config", type=Path, help="JSON file with option values; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="combpso", description="Swarm-based feature selection experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a generated dataset to CSV")
    _data_opts(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--config", type=Path)

    r = sub.add_parser("run", help="single seeded search run")
    _data_opts(r)
    _engine_opts(r)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("experiment", help="R seeded runs with aggregate report")
    _data_opts(e)
    _engine_opts(e)
    e.add_argument("--runs", type=int)
    e.add_argument("--base-seed", type=int)
    e.add_argument("--format", choices=("json", "csv"))
    e.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="convert or summarize a JSON report")
    p.add_argument("--in", dest="src", type=Path, required=True)
    p.add_argument("--format", choices=("json", "csv", "table"), default="table")
    p.add_argument("--out", type=Path)
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the --config file, then explicit flags."""
    opts = dict(DEFAULTS)
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        try:
            file_opts = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from exc
        if not isinstance(file_opts, dict):
            raise UsageError(f"config {cfg_path} must hold a JSON object")
        unknown = set(file_opts) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config key(s) in {cfg_path}: {sorted(unknown)}")
        opts.update(file_opts)
    for k, v in vars(args).items():
        if v is not None and k in DEFAULTS:
            opts[k] = v
    if opts["dataset"] is None:
        raise UsageError("--dataset is required (flag or config)")
    return opts


def spec_from(opts: dict, runs: int, base_seed: int) -> ExperimentSpec:
    overrides = {k: opts[k] for k in harness.ENGINE_KEYS if opts.get(k) is not None}
    return ExperimentSpec(
        algorithm=opts["algo"], dataset=opts["dataset"], n_total=opts["n_total"], runs=runs,
        base_seed=base_seed, overrides=overrides, ntree=opts["ntree"], nodesize=opts["nodesize"],
        oracle=opts["oracle"], memoize=bool(opts["memoize"]), stratify=bool(opts["stratify"]),
        monks_rule=opts["monks_rule"], samples=opts["samples"],
    )


def _cmd_gen(args) -> None:
    opts = resolve(args)
    spec = ExperimentSpec("so-combpso", opts["dataset"], opts["n_total"], 1, opts["seed"],
                          monks_rule=opts["monks_rule"], samples=opts["samples"])
    if opts["dataset"] not in GENERATORS:
        raise UsageError(f"gen-data needs a generator name, one of {sorted(GENERATORS)}")
    write_csv(harness.load_dataset(spec), args.out)


def _cmd_run(args) -> None:
    opts = resolve(args)
    spec = spec_from(opts, 1, opts["seed"])
    ds = harness.load_dataset(spec)
    res = harness.run_single(spec, ds, 0)
    if isinstance(res, MORunResult):
        out = {"algorithm": spec.algorithm, "seed": spec.base_seed, "function_calls": res.function_calls,
               "archive": [{"mask": [int(i) for i in np.flatnonzero(e.mask)], "f1": e.objectives.f1,
                            "f2": e.objectives.f2, "test_error": te}
                           for e, te in zip(res.entries, res.test_errors)]}
    else:
        f = res.best_fitness
        out = {"algorithm": spec.algorithm, "seed": spec.base_seed, "mask": res.selected,
               "fitness": {"scalar": f.scalar, "error": f.error, "size_fraction": f.size_fraction},
               "test_error": res.test_error, "function_calls": res.function_calls, "history": res.history}
    args.out.write_text(json.dumps(out, indent=2) + "\n")


def _cmd_experiment(args) -> None:
    opts = resolve(args)
    rep = harness.run_experiment(spec_from(opts, opts["runs"], opts["base_seed"]))
    harness.emit_report(rep, opts["format"], args.out)


def _table(d: dict) -> str:
    m = d["means"]
    fmt = lambda v: "-" if v is None else f"{v:.4g}"
    lines = [f"{d['spec']['algorithm']} on {d['spec']['dataset']} (n={d['spec']['n_total']}, R={len(d['runs'])})",
             "<FS>={}  <E>={}  <CV>={}  <%SRF>={}  <FC>={}".format(
                 *(fmt(m[k]) for k in ("fs_size", "error", "cv_error", "srf", "fc")))]
    if d.get("modal_mask") is not None:
        lines.append(f"modal mask: {d['modal_mask']}")
    if d.get("front"):
        lines.append(f"merged front: {len(d['front'])} points")
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> None:
    try:
        d = json.loads(args.src.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.src}: {exc}") from exc
    text = _table(d) if args.format == "table" else harness.render(d, args.format)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


COMMANDS = {"gen-data": _cmd_gen, "run": _cmd_run, "experiment": _cmd_experiment, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, DegenerateTrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
