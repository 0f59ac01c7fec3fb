"""Repeated-run experiments, aggregate metrics, merged fronts and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, run_bpso, run_mopso
from .datasets import GENERATORS, Dataset, GroundTruth, generate, load_csv, make_split
from .mo_engine import MOConfig, MORunResult, run_mo
from .oracle import ForestParams, Objectives, WrapperOracle
from .pareto import dominates
from .profiles import profile_for
from .so_engine import SOConfig, SORunResult, run_so

log = logging.getLogger(__name__)

ALGORITHMS = ("so-combpso", "mo-combpso", "bpso", "mopso")
MO_ALGORITHMS = ("mo-combpso", "mopso")
ENGINE_KEYS = ("swarm_size", "iterations", "theta", "gamma", "alpha", "archive_capacity", "c1", "c2",
               "leader_metric", "dynamic_population", "turbulence", "per_dimension_random")


class RunFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str
    dataset: str
    n_total: int = 10
    runs: int = 30
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)
    ntree: int = 100
    nodesize: int = 1
    oracle: str = "rf"
    memoize: bool = False
    stratify: bool = True
    monks_rule: str = "printed"
    samples: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        unknown = set(self.overrides) - set(ENGINE_KEYS)
        if unknown:
            raise ValueError(f"unknown engine override(s): {sorted(unknown)}")

    def run_seed(self, r: int) -> int:
        return self.base_seed + r

    def to_dict(self) -> dict:
        d = asdict(self)
        d["overrides"] = dict(sorted(self.overrides.items()))
        return d


@dataclass
class RunMetrics:
    run: int
    seed: int
    fs_size: float
    error: float
    cv_error: float
    srf: float | None
    fc: int
    masks: list[list[int]]


@dataclass(frozen=True)
class FrontPoint:
    mask: tuple[int, ...]
    f1: float
    f2: float
    test_error: float
    run: int

    @property
    def objectives(self) -> Objectives:
        return Objectives(self.f1, self.f2)


@dataclass
class AggregateReport:
    spec: dict
    means: dict
    runs: list[RunMetrics]
    front: list[FrontPoint] | None = None
    modal_mask: list[int] | None = None


def srf_coverage(mask, gt: GroundTruth | None) -> float | None:
    """Percent of strongly relevant features in ``mask``.

    With no strongly relevant features, the best fractional cover over the
    optimal subsets is used instead (100 iff one subset is fully contained).
    Returns None when no ground truth applies.
    """
    if gt is None:
        return None
    sel = {int(i) for i in np.flatnonzero(np.asarray(mask, dtype=bool))}
    if gt.strongly_relevant:
        return 100.0 * len(sel & gt.strongly_relevant) / len(gt.strongly_relevant)
    if gt.optimal_subsets:
        return max(100.0 * len(sel & s) / len(s) for s in gt.optimal_subsets)
    return None


def load_dataset(spec: ExperimentSpec) -> Dataset:
    if spec.dataset in GENERATORS:
        kw = {}
        if spec.dataset == "monks":
            kw["rule"] = spec.monks_rule
        elif spec.samples is not None:
            kw["m"] = spec.samples
        return generate(spec.dataset, spec.n_total, seed=spec.base_seed, **kw)
    if not Path(spec.dataset).is_file():
        raise FileNotFoundError(f"dataset {spec.dataset!r} is neither a generator {sorted(GENERATORS)} nor a file")
    return load_csv(spec.dataset)


def build_config(algorithm: str, n: int, seed: int, overrides: dict | None = None):
    """Engine config from the width-matched hyperparameter column plus overrides."""
    o = dict(overrides or {})
    pr = profile_for(n)
    S = o.pop("swarm_size", pr.swarm_size)
    T = o.pop("iterations", pr.iterations)
    if algorithm == "so-combpso":
        keys = ("alpha", "theta", "gamma", "dynamic_population", "turbulence", "per_dimension_random")
        return SOConfig(S, T, pr.comb_bounds(), pr.schedule(T), seed=seed,
                        **{"theta": pr.theta, "gamma": pr.gamma, **{k: o[k] for k in keys if k in o}})
    if algorithm == "mo-combpso":
        keys = ("theta", "gamma", "archive_capacity", "leader_metric", "dynamic_population", "turbulence",
                "per_dimension_random")
        return MOConfig(S, T, pr.comb_bounds(), pr.schedule(T), seed=seed,
                        **{"theta": pr.theta, "gamma": pr.gamma, **{k: o[k] for k in keys if k in o}})
    keys = ("c1", "c2", "alpha", "archive_capacity")
    return BaselineConfig(S, T, pr.v_abs, pr.omega_min, pr.omega_max, seed=seed, x_abs=pr.x_abs,
                          **{k: o[k] for k in keys if k in o})


RUNNERS = {"so-combpso": run_so, "mo-combpso": run_mo, "bpso": run_bpso, "mopso": run_mopso}


def make_oracle(spec: ExperimentSpec, ds: Dataset, seed: int) -> WrapperOracle:
    split = make_split(ds, seed=seed, stratify=spec.stratify)
    return WrapperOracle(ds, split, ForestParams(spec.ntree, spec.nodesize, seed), kind=spec.oracle,
                         memoize=spec.memoize)


def run_single(spec: ExperimentSpec, ds: Dataset, r: int):
    seed = spec.run_seed(r)
    oracle = make_oracle(spec, ds, seed)
    cfg = build_config(spec.algorithm, ds.n, seed, spec.overrides)
    return RUNNERS[spec.algorithm](cfg, ds, oracle.split, oracle)


def _mask_list(mask) -> list[int]:
    return [int(i) for i in np.flatnonzero(mask)]


def metrics_of(result, r: int, seed: int, gt: GroundTruth | None) -> RunMetrics:
    if isinstance(result, SORunResult):
        m = result.best_mask
        return RunMetrics(r, seed, float(np.count_nonzero(m)), result.test_error, result.best_fitness.error,
                          srf_coverage(m, gt), result.function_calls, [_mask_list(m)])
    entries = result.entries
    srfs = [srf_coverage(e.mask, gt) for e in entries]
    return RunMetrics(
        r, seed,
        float(np.mean([e.size for e in entries])),
        float(np.mean(result.test_errors)),
        float(np.mean([e.objectives.f1 for e in entries])),
        None if srfs[0] is None else float(np.mean(srfs)),
        result.function_calls,
        [_mask_list(e.mask) for e in entries],
    )


def merge_fronts(points: list[FrontPoint]) -> list[FrontPoint]:
    """Non-dominated union, one point per (mask, objectives), canonically ordered."""
    best: dict[tuple, FrontPoint] = {}
    for p in points:
        key = (p.mask, p.f1, p.f2)
        if key not in best or p.run < best[key].run:
            best[key] = p
    uniq = list(best.values())
    keep = [p for p in uniq if not any(dominates(q.objectives, p.objectives) for q in uniq)]
    return sorted(keep, key=lambda p: (p.f2, p.f1, p.mask))


def _mean(xs):
    return float(np.mean(xs)) if xs else None


def aggregate(spec: ExperimentSpec, rows: list[RunMetrics], front: list[FrontPoint] | None) -> AggregateReport:
    srfs = [r.srf for r in rows if r.srf is not None]
    means = {
        "fs_size": _mean([r.fs_size for r in rows]),
        "error": _mean([r.error for r in rows]),
        "cv_error": _mean([r.cv_error for r in rows]),
        "srf": _mean(srfs) if len(srfs) == len(rows) else None,
        "fc": sum(r.fc for r in rows) / len(rows),
    }
    modal = None
    if front is None:
        counts = Counter(tuple(r.masks[0]) for r in rows)
        # most frequent; ties go to the mask seen first
        modal = list(max(counts, key=lambda k: (counts[k], -next(i for i, r in enumerate(rows) if tuple(r.masks[0]) == k))))
    return AggregateReport(spec.to_dict(), means, rows, front, modal)


def run_experiment(spec: ExperimentSpec, ds: Dataset | None = None) -> AggregateReport:
    """R seeded runs of one (algorithm, dataset) cell, aggregated in run order."""
    ds = ds if ds is not None else load_dataset(spec)
    rows, points = [], []
    for r in range(spec.runs):
        t0 = time.perf_counter()
        try:
            res = run_single(spec, ds, r)
        except Exception as exc:
            raise RunFailure(f"{spec.algorithm} on {spec.dataset}: run {r} failed: {exc}") from exc
        rows.append(metrics_of(res, r, spec.run_seed(r), ds.ground_truth))
        if isinstance(res, MORunResult):
            points += [FrontPoint(tuple(_mask_list(e.mask)), e.objectives.f1, e.objectives.f2, te, r)
                       for e, te in zip(res.entries, res.test_errors)]
        log.info("run %d/%d done in %.1fs (fc=%d)", r + 1, spec.runs, time.perf_counter() - t0, rows[-1].fc)
    front = merge_fronts(points) if spec.algorithm in MO_ALGORITHMS else None
    return aggregate(spec, rows, front)


def _sig(x):
    if x is None:
        return None
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    return float(f"{float(x):.6g}")


def report_to_dict(rep: AggregateReport) -> dict:
    d = {
        "spec": rep.spec,
        "means": {k: _sig(v) for k, v in rep.means.items()},
        "modal_mask": rep.modal_mask,
        "runs": [
            {"run": r.run, "seed": r.seed, "fs_size": _sig(r.fs_size), "error": _sig(r.error),
             "cv_error": _sig(r.cv_error), "srf": _sig(r.srf), "fc": r.fc, "masks": r.masks}
            for r in rep.runs
        ],
    }
    if rep.front is not None:
        d["front"] = [{"mask": list(p.mask), "f1": _sig(p.f1), "f2": _sig(p.f2),
                       "test_error": _sig(p.test_error), "run": p.run} for p in rep.front]
    return d


CSV_FIELDS = ("record", "run", "seed", "fs_size", "error", "cv_error", "srf", "fc", "mask", "f1", "f2")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join(str(i) for i in v)
    return repr(v) if isinstance(v, float) else str(v)


def report_to_csv(d: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    m = d["means"]
    w.writerow(["mean", "", "", *(_cell(m[k]) for k in ("fs_size", "error", "cv_error", "srf", "fc")),
                _cell(d.get("modal_mask")), "", ""])
    for r in d["runs"]:
        for mask in r["masks"]:
            w.writerow(["run", r["run"], r["seed"], *(_cell(r[k]) for k in ("fs_size", "error", "cv_error", "srf", "fc")),
                        _cell(mask), "", ""])
    for p in d.get("front") or []:
        w.writerow(["front", p["run"], "", len(p["mask"]), _cell(p["test_error"]), _cell(p["f1"]), "", "",
                    _cell(p["mask"]), _cell(p["f1"]), _cell(p["f2"])])
    return buf.getvalue()


def read_csv_means(text: str) -> dict:
    for row in csv.DictReader(io.StringIO(text)):
        if row["record"] == "mean":
            return {k: (float(row[k]) if row[k] != "" else None) for k in ("fs_size", "error", "cv_error", "srf", "fc")}
    raise ValueError("no mean row in report CSV")


def render(rep: AggregateReport | dict, fmt: str = "json") -> str:
    d = rep if isinstance(rep, dict) else report_to_dict(rep)
    if fmt == "json":
        return json.dumps(d, indent=2) + "\n"
    if fmt == "csv":
        return report_to_csv(d)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(rep: AggregateReport | dict, fmt: str, path) -> Path:
    path = Path(path)
    text = render(rep, fmt)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path
