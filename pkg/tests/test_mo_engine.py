import numpy as np
import pytest

from combpso.mo_engine import MOConfig, run_mo, select_leader, update_pbest_mo, weakness_order
from combpso.oracle import ContractViolation, Objectives
from combpso.pareto import ArchiveEntry, ParetoArchive, dominates
from combpso.profiles import profile_for
from combpso.schedules import coefficients_at
from combpso.so_engine import ConfigError
from combpso.swarm import Particle


def mo_cfg(n=10, T=30, S=12, seed=0, **kw):
    pr = profile_for(n)
    return MOConfig(S, T, pr.comb_bounds(), pr.schedule(T), seed=seed, **kw)


def particle(x, b=None, score=None):
    x = np.asarray(x, float)
    b = x > 0 if b is None else np.asarray(b, bool)
    return Particle(x=x, v=np.zeros_like(x), b=b, pbest_x=x.copy(), pbest_b=b.copy(), pbest_score=score)


def entries_at(xs):
    arch = ParetoArchive(10)
    for i, x in enumerate(xs):
        arch.insert(ArchiveEntry(np.eye(len(xs), dtype=bool)[i], np.asarray(x, float),
                                 Objectives(0.1 * i, 1 - 0.1 * i)))
    return arch.entries


def test_leader_examples():
    es = entries_at([[1.0, 0.0]])
    assert select_leader(particle([5.0, 5.0]), es) is es[0]
    es = entries_at([[3.0, 0.0], [0.0, 2.0]])
    assert select_leader(particle([0.0, 2.0]), es) is es[1]
    es = entries_at([[1.0, 0.0], [2.0, 0.0]])
    assert select_leader(particle([0.0, 0.0]), es) is es[0]
    es = entries_at([[1.0, 0.0], [-1.0, 0.0]])
    assert select_leader(particle([0.0, 0.0]), es) is es[0]  # tie: oldest
    with pytest.raises(ContractViolation):
        select_leader(particle([0.0]), [])


def test_leader_hamming():
    arch = ParetoArchive(10)
    arch.insert(ArchiveEntry(np.array([1, 1, 0], bool), np.zeros(3), Objectives(0.1, 2 / 3)))
    arch.insert(ArchiveEntry(np.array([0, 0, 1], bool), np.zeros(3), Objectives(0.2, 1 / 3)))
    p = particle([0.0, 0.0, 0.0], b=[0, 1, 1])
    assert select_leader(p, arch.entries, "hamming") is arch.entries[1]


def test_pbest_rules():
    rng = np.random.default_rng(0)
    p = particle([1.0, 2.0], score=Objectives(0.5, 0.5))
    assert update_pbest_mo(p, Objectives(0.4, 0.5), rng)
    assert not update_pbest_mo(p, Objectives(0.6, 0.6), rng)
    flips = []
    for seed in range(40):
        q = particle([1.0], score=Objectives(0.5, 0.5))
        flips.append(update_pbest_mo(q, Objectives(0.4, 0.6), np.random.default_rng(seed)))
    assert 0 < sum(flips) < 40
    a = update_pbest_mo(particle([1.0], score=Objectives(0.5, 0.5)), Objectives(0.4, 0.6), np.random.default_rng(1))
    b = update_pbest_mo(particle([1.0], score=Objectives(0.5, 0.5)), Objectives(0.4, 0.6), np.random.default_rng(1))
    assert a == b


def test_weakness_order():
    arch = ParetoArchive(10)
    arch.insert(ArchiveEntry(np.array([1, 0], bool), np.zeros(2), Objectives(0.1, 0.5)))
    arch.insert(ArchiveEntry(np.array([0, 1], bool), np.zeros(2), Objectives(0.05, 0.6)))
    objs = [Objectives(0.1, 0.5), Objectives(0.3, 1.0), Objectives(0.2, 1.0), Objectives(0.3, 0.55)]
    assert weakness_order(objs, arch) == [1, 2, 3, 0]


def test_config_validation():
    with pytest.raises(ConfigError):
        mo_cfg(archive_capacity=1)
    with pytest.raises(ConfigError):
        mo_cfg(leader_metric="cosine")


def test_instrumented_run_invariants(syn2, syn2_split, stump_oracle):
    checks = {"insert": 0, "turbulence": 0, "replacement": 0}

    def observer(event, st):
        if event == "insert":
            st["archive"].check_invariants()
            checks["insert"] += 1
        elif event in checks:
            checks[event] += 1

    res = run_mo(mo_cfg(T=40), syn2, syn2_split, stump_oracle, observer=observer)
    assert checks["insert"] == 12 * 41
    assert checks["turbulence"] > 0
    objs = [e.objectives for e in res.entries]
    assert any(e.mask.tolist() == [False, False, True] + [False] * 7 for e in res.entries)
    assert all(not dominates(a, b) for a in objs for b in objs)
    assert len(res.test_errors) == len(res.entries)
    assert res.function_calls > 0


def test_capacity_two(syn2, syn2_split, stump_oracle):
    res = run_mo(mo_cfg(T=25, archive_capacity=2), syn2, syn2_split, stump_oracle)
    assert max(res.archive_sizes) <= 2


def test_leader_consistency_on_static_archive(syn2, syn2_split, stump_oracle):
    res = run_mo(mo_cfg(T=10), syn2, syn2_split, stump_oracle)
    entries = res.entries
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = particle(rng.uniform(-3, 3, 10))
        assert select_leader(p, entries) is select_leader(p, list(entries))


def test_mo_determinism(syn2, syn2_split):
    from combpso.oracle import WrapperOracle
    runs = [run_mo(mo_cfg(T=15, seed=4), syn2, syn2_split, WrapperOracle(syn2, syn2_split, kind="stump"))
            for _ in range(2)]
    assert [e.key() for e in runs[0].entries] == [e.key() for e in runs[1].entries]


def test_schedule_emits_valid_coefficients():
    cfg = mo_cfg(n=100, T=1000)
    for t in range(0, 1001, 7):
        c = coefficients_at(t, cfg.schedule)
        assert c.omega <= 1 and 0 < (c.c1 + c.c2) / 2 < 2 * (1 + c.omega)
