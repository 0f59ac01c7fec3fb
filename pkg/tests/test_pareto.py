import numpy as np
import pytest

from combpso.oracle import Objectives
from combpso.pareto import ArchiveEntry, ParetoArchive, crowding_distance, dominates, nondominated


def entry(mask, f1, f2, x=None):
    mask = np.asarray(mask, bool)
    x = mask.astype(float) if x is None else np.atleast_1d(np.asarray(x, float))
    return ArchiveEntry(mask, x, Objectives(f1, f2))


def test_dominates_examples():
    assert dominates(Objectives(0.1, 0.2), Objectives(0.2, 0.2))
    a, b = Objectives(0.1, 0.3), Objectives(0.3, 0.1)
    assert not dominates(a, b) and not dominates(b, a)
    assert not dominates(a, a)


def test_insert_rules():
    arch = ParetoArchive(10)
    assert arch.insert(entry([1, 0, 0], 0.2, 1 / 3)).inserted
    assert not arch.insert(entry([1, 1, 0], 0.3, 2 / 3)).inserted
    res = arch.insert(entry([0, 1, 0], 0.2, 1 / 3))
    assert res.inserted and len(arch) == 2
    assert not arch.insert(entry([0, 1, 0], 0.2, 1 / 3)).inserted
    res = arch.insert(entry([0, 0, 1], 0.1, 1 / 3))
    assert res.inserted and len(res.displaced) == 2 and len(arch) == 1
    arch.check_invariants()


def test_reject_tie_rule():
    arch = ParetoArchive(10, tie_rule="reject")
    arch.insert(entry([1, 0], 0.2, 0.5))
    assert not arch.insert(entry([0, 1], 0.2, 0.5)).inserted


def test_prune_keeps_extremes():
    arch = ParetoArchive(2)
    for i, (f1, f2) in enumerate([(0.1, 0.9), (0.5, 0.5), (0.9, 0.1)]):
        arch.insert(entry(np.eye(3)[i], f1, f2, x=[float(i)]))
    objs = sorted(e.objectives.as_tuple() for e in arch)
    assert objs == [(0.1, 0.9), (0.9, 0.1)]


def test_prune_removes_smallest_neighbour_gap():
    arch = ParetoArchive(3)
    pts = [(0.0, 0.1, 0.9), (0.1, 0.4, 0.6), (5.0, 0.6, 0.4), (10.0, 0.9, 0.1)]
    for i, (x, f1, f2) in enumerate(pts):
        arch.insert(entry(np.eye(4)[i], f1, f2, x=[x]))
    assert sorted(float(e.x_snapshot[0]) for e in arch) == [0.0, 5.0, 10.0]


def test_prune_noop_at_capacity():
    arch = ParetoArchive(3)
    for i, (f1, f2) in enumerate([(0.1, 0.9), (0.5, 0.5), (0.9, 0.1)]):
        arch.insert(entry(np.eye(3)[i], f1, f2))
    before = [e.order for e in arch]
    arch.prune()
    assert [e.order for e in arch] == before


def test_crowding_prune_and_distance():
    cd = crowding_distance(np.array([[0.0, 1.0], [0.5, 0.5], [0.6, 0.4], [1.0, 0.0]]))
    assert np.isinf(cd[0]) and np.isinf(cd[3]) and cd[2] < cd[1]
    arch = ParetoArchive(3, prune="crowding")
    for i, (f1, f2) in enumerate([(0.0, 1.0), (0.5, 0.5), (0.6, 0.4), (1.0, 0.0)]):
        arch.insert(entry(np.eye(4)[i], f1, f2))
    assert sorted(e.objectives.f1 for e in arch) == [0.0, 0.5, 1.0]


def test_capacity_under_random_inserts():
    rng = np.random.default_rng(0)
    arch = ParetoArchive(5)
    for _ in range(500):
        m = rng.random(8) < 0.5
        if not m.any():
            continue
        f1 = round(rng.random(), 2)
        arch.insert(ArchiveEntry(m, rng.random(8), Objectives(f1, m.sum() / 8)))
        arch.check_invariants()
        assert len(arch) <= 5


def test_invalid_archive_args():
    for kw in (dict(capacity=1), dict(tie_rule="x"), dict(prune="y")):
        with pytest.raises(ValueError):
            ParetoArchive(**kw)


def test_nondominated_filter():
    pts = [Objectives(0.1, 0.5), Objectives(0.2, 0.6), Objectives(0.3, 0.1)]
    assert nondominated(pts, objectives=lambda o: o) == [pts[0], pts[2]]
