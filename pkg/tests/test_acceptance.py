"""Desk-scale acceptance criteria.

Each test prints one ``criterion N: PASS/FAIL - detail`` line (also repeated
in the pytest terminal summary). Profile: R = 10 runs, 100 trees, the
hyperparameter column matching the feature count, memoized oracle.
"""

import itertools
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from combpso import harness
from combpso.datasets import gen_synthetic2, generate, make_split
from combpso.harness import ExperimentSpec, run_experiment, srf_coverage
from combpso.mo_engine import run_mo
from combpso.oracle import ForestParams, Objectives, WrapperOracle, so_fitness
from combpso.pareto import dominates
from combpso.profiles import PROFILES, profile_for
from combpso.schedules import check_convergence_constraint, coefficients_at
from combpso.so_engine import SOConfig, run_so
from combpso.mo_engine import MOConfig
from combpso.swarm import decode_position, sigmoid

pytestmark = pytest.mark.slow

R = 10


def so_cell(dataset):
    spec = ExperimentSpec("so-combpso", dataset, 10, runs=R, base_seed=0, memoize=True)
    t0 = time.perf_counter()
    rep = run_experiment(spec)
    return rep, time.perf_counter() - t0


def test_criterion_1_synthetic2_so(verdict):
    rep, elapsed = so_cell("syn2")
    fs, err = rep.means["fs_size"], rep.means["error"]
    ok = fs <= 2 and rep.modal_mask == [2] and err <= 0.03 and elapsed <= 300
    verdict("criterion 1", ok, f"<FS>={fs:.2f} (<=2), modal mask={rep.modal_mask} (=[2]), <E>={100 * err:.2f}% (<=3%), "
                               f"<FC>={rep.means['fc']:.0f}, runtime {elapsed:.0f}s (<=300s)")
    assert ok


def _reduced_subset_wins(seed):
    """True when {f1, f4} scores strictly lower than {f1, f3, f4} on this run's split."""
    ds = generate("monks", 10, seed=0)
    o = WrapperOracle(ds, make_split(ds, seed=seed), ForestParams(seed=seed))
    m14, m134 = np.zeros(10, bool), np.zeros(10, bool)
    m14[[1, 4]] = True
    m134[[1, 3, 4]] = True
    return so_fitness(o.cv_error(m14), 2, 10).scalar < so_fitness(o.cv_error(m134), 3, 10).scalar


@pytest.mark.xfail(strict=True, reason="on 3 of the 10 seeded splits the fitness optimum is {f1,f4} (SRF 67%); "
                                       "see README 'Known acceptance failures'")
def test_criterion_2_monks_so(verdict):
    rep, elapsed = so_cell("monks")
    good = [r.srf == 100.0 and r.error <= 0.02 for r in rep.runs]
    flipped = sum(_reduced_subset_wins(r.seed) for r in rep.runs)
    masks = [r.masks[0] for r in rep.runs]
    ok = sum(good) >= 8
    verdict("criterion 2", ok, f"runs with SRF=100% and E<=2%: {sum(good)}/10 (need >=8); <%SRF>={rep.means['srf']:.1f}%, "
                               f"<E>={100 * rep.means['error']:.2f}%; masks={masks}; splits where the reduced "
                               f"subset {{1,4}} has lower fitness than {{1,3,4}}: {flipped}; runtime {elapsed:.0f}s")
    assert ok


def test_criterion_3_synthetic1_so(verdict):
    rep, elapsed = so_cell("syn1")
    pairs = [{0, 1}, {0, 3}, {1, 2}, {2, 3}]
    hits = [any(p <= set(r.masks[0]) for p in pairs) for r in rep.runs]
    ok = sum(hits) >= 8
    verdict("criterion 3", ok, f"best mask contains an optimal pair in {sum(hits)}/10 runs (need >=8); "
                               f"<FS>={rep.means['fs_size']:.1f}, runtime {elapsed:.0f}s")
    assert ok


class BudgetExceeded(RuntimeError):
    pass


class BudgetOracle(WrapperOracle):
    deadline = float("inf")

    def evaluate(self, mask):
        if time.monotonic() > self.deadline:
            raise BudgetExceeded("wall-clock budget exhausted")
        return super().evaluate(mask)


@pytest.mark.xfail(strict=True, reason="full n=100 cell needs many CPU-hours on one core; "
                                       "see README 'Known acceptance failures'")
def test_criterion_4_scalability_n100(verdict, monkeypatch):
    budget = float(os.environ.get("COMBPSO_C4_BUDGET", 45 * 60))
    deadline = time.monotonic() + budget

    def make_oracle(spec, ds, seed):
        o = BudgetOracle(ds, make_split(ds, seed=seed), ForestParams(spec.ntree, spec.nodesize, seed), memoize=True)
        o.deadline = deadline
        return o

    monkeypatch.setattr(harness, "make_oracle", make_oracle)
    ds = generate("syn2", 100, seed=0)
    rows = {"mo-combpso": [], "bpso": []}
    points = []
    t0 = time.monotonic()
    exhausted = False
    for algo in rows:
        spec = ExperimentSpec(algo, "syn2", 100, runs=R, memoize=True)
        for r in range(R):
            try:
                res = harness.run_single(spec, ds, r)
            except Exception as exc:
                if isinstance(exc, BudgetExceeded) or isinstance(exc.__cause__, BudgetExceeded):
                    exhausted = True
                    break
                raise
            rows[algo].append(harness.metrics_of(res, r, r, ds.ground_truth))
            if algo == "mo-combpso":
                points += [harness.FrontPoint(tuple(int(i) for i in np.flatnonzero(e.mask)), e.objectives.f1,
                                              e.objectives.f2, te, r) for e, te in zip(res.entries, res.test_errors)]
        if exhausted:
            break
    elapsed = time.monotonic() - t0
    done = {a: len(v) for a, v in rows.items()}
    if exhausted:
        partial = ""
        if rows["mo-combpso"]:
            partial = f"; partial MO <FS>={np.mean([r.fs_size for r in rows['mo-combpso']]):.2f}"
        verdict("criterion 4", False, f"runtime target missed: {budget / 60:.1f} min budget exhausted after "
                                      f"{done['mo-combpso']}/10 MO-COMB-PSO and {done['bpso']}/10 BPSO runs{partial}")
        pytest.fail("criterion 4 runtime budget exhausted")
    front = harness.merge_fronts(points)
    mo_fs = np.mean([r.fs_size for r in rows["mo-combpso"]])
    bpso_fs = np.mean([r.fs_size for r in rows["bpso"]])
    good_front = any(len(p.mask) <= 10 and srf_coverage(np.isin(np.arange(100), p.mask), ds.ground_truth) == 100
                     for p in front)
    ok = mo_fs <= 10 and good_front and bpso_fs >= 2 * mo_fs and elapsed <= 45 * 60
    verdict("criterion 4", ok, f"MO <FS>={mo_fs:.2f} (<=10), front has SRF-100% mask with |S|<=10: {good_front}, "
                               f"BPSO <FS>={bpso_fs:.2f} (>= 2x MO), runtime {elapsed / 60:.1f} min (<=45)")
    assert ok


def test_criterion_5_smoke_n10000(verdict):
    ds = gen_synthetic2(m=200, n_total=10_000, seed=0)
    split = make_split(ds, seed=0)
    pr = profile_for(ds.n)
    T, S = 20, 30
    problems = []

    def so_observer(event, st):
        if event == "iteration":
            if so_observer.last is not None and st["gbest_scalar"] > so_observer.last:
                problems.append(f"gbest rose at t={st['t']}")
            so_observer.last = st["gbest_scalar"]
            c = st["coeff"]
            if not check_convergence_constraint(c.omega, c.c1, c.c2):
                problems.append(f"convergence constraint at t={st['t']}")
        elif event == "turbulence":
            for p, (x, b, pbx, _) in zip(st["swarm"], st["before"]):
                if not (np.array_equal(p.x, x) and np.array_equal(p.b, b) and np.array_equal(p.pbest_x, pbx)):
                    problems.append(f"turbulence moved a position at t={st['t']}")
        for p in st["swarm"]:
            if not (p.b.any() and np.all(p.x >= -pr.x_abs) and np.all(p.x <= pr.x_abs)):
                problems.append(f"particle left the box or decoded empty at t={st['t']}")
                break
    so_observer.last = None

    def mo_observer(event, st):
        if event == "insert":
            try:
                st["archive"].check_invariants()
            except AssertionError as exc:
                problems.append(f"archive: {exc}")

    t0 = time.perf_counter()
    so = run_so(SOConfig(S, T, pr.comb_bounds(), pr.schedule(T), seed=0), ds, split,
                WrapperOracle(ds, split, kind="stump"), observer=so_observer)
    mo = run_mo(MOConfig(S, T, pr.comb_bounds(), pr.schedule(T), seed=0), ds, split,
                WrapperOracle(ds, split, kind="stump"), observer=mo_observer)
    elapsed = time.perf_counter() - t0
    ok = not problems and so.function_calls > 0 and len(mo.entries) >= 1
    verdict("criterion 5", ok, f"n=10^4, swarm 30, 20 iterations, stump oracle: SO |S|={int(so.best_mask.sum())}, "
                               f"MO archive {len(mo.entries)} entries, invariant violations: {len(problems)}, "
                               f"{elapsed:.0f}s")
    assert ok, problems[:5]


def test_criterion_6_bruteforce_n6(verdict):
    ds = gen_synthetic2(m=200, n_total=6, seed=0)
    pr = profile_for(6)
    matches, gaps = 0, []
    for seed in range(R):
        split = make_split(ds, seed=seed)
        oracle = WrapperOracle(ds, split, kind="stump", memoize=True)
        best = min(so_fitness(oracle.evaluate(np.array(bits, bool)), sum(bits), 6).scalar
                   for bits in itertools.product([0, 1], repeat=6) if any(bits))
        res = run_so(SOConfig(pr.swarm_size, pr.iterations, pr.comb_bounds(), pr.schedule(), seed=seed),
                     ds, split, oracle)
        matches += res.best_fitness.scalar == best
        gaps.append(res.best_fitness.scalar - best)
    ok = matches >= 9
    verdict("criterion 6", ok, f"final F(S) equals the exhaustive minimum over 63 masks in {matches}/10 seeds "
                               f"(need >=9, exact); max gap {max(gaps):.3g}")
    assert ok


def test_criterion_7_invariant_suites(verdict):
    failures = []
    # schedule monotonicity, exact mirror identity and the convergence check for every column
    for pr in PROFILES:
        p = pr.schedule()
        prev = None
        for t in range(p.T + 1):
            c = coefficients_at(t, p)
            if c.c1 + c.c2 != p.c_min + p.c_max:
                failures.append(f"mirror n={pr.n_ref} t={t}")
            if not check_convergence_constraint(c.omega, c.c1, c.c2):
                failures.append(f"convergence n={pr.n_ref} t={t}")
            if prev and (c.omega > prev.omega or c.c1 > prev.c1 or c.c2 < prev.c2):
                failures.append(f"monotone n={pr.n_ref} t={t}")
            prev = c
    # decoding is Bernoulli(S(x)) per bit
    rng = np.random.default_rng(1)
    x = np.array([-2.0, -0.5, 0.0, 1.0, 6.0])
    N = 100_000
    ones = np.zeros(x.size)
    for _ in range(N):
        ones += decode_position(x, rng)
    p = sigmoid(x)
    for j in range(x.size - 1):  # the last bit is the repair target
        if stats.chisquare([ones[j], N - ones[j]], [N * p[j], N * (1 - p[j])]).pvalue <= 0.01:
            failures.append(f"chi-square bit {j}")
    # archive invariants after every insertion in a 200-iteration run
    ds = gen_synthetic2(m=200, n_total=10, seed=0)
    split = make_split(ds, seed=0)
    pr = profile_for(10)
    inserts = [0]

    def observer(event, st):
        if event == "insert":
            inserts[0] += 1
            try:
                st["archive"].check_invariants()
            except AssertionError as exc:
                failures.append(f"archive: {exc}")

    run_mo(MOConfig(pr.swarm_size, 200, pr.comb_bounds(), pr.schedule(200), seed=0), ds, split,
           WrapperOracle(ds, split, memoize=True), observer=observer)
    # dominance is irreflexive and transitive
    g = np.random.default_rng(2)
    trip = g.integers(0, 5, size=(10_000, 3, 2)) / 4
    for a, b, c in trip:
        A, B, C = Objectives(*a), Objectives(*b), Objectives(*c)
        if dominates(A, A):
            failures.append("reflexive")
        if dominates(A, B) and dominates(B, C) and not dominates(A, C):
            failures.append("transitivity")
    ok = not failures
    verdict("criterion 7", ok, f"schedules x3 columns, chi-square N=1e5, {inserts[0]} checked archive inserts, "
                               f"1e4 dominance triples; violations: {len(failures)}")
    assert ok, failures[:5]


def test_criterion_8_determinism(verdict, tmp_path):
    args = ["experiment", "--algo", "mo-combpso", "--dataset", "syn2", "--n-total", "10", "--runs", "3",
            "--swarm-size", "10", "--iterations", "30", "--memoize"]
    outs = []
    for i in range(2):
        for fmt in ("json", "csv"):
            out = tmp_path / f"rep{i}.{fmt}"
            subprocess.run([sys.executable, "-m", "combpso.cli", *args, "--format", fmt, "--out", str(out)],
                           check=True, capture_output=True)
            outs.append(out.read_bytes())
    ok = outs[0] == outs[2] and outs[1] == outs[3]
    verdict("criterion 8", ok, "two `experiment` invocations give byte-identical JSON and CSV reports"
                               if ok else "reports differ between invocations")
    assert ok
