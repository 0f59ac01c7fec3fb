"""Two-objective Pareto archive (minimization) with pluggable pruning."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .oracle import Objectives


def dominates(a: Objectives, b: Objectives) -> bool:
    return a.f1 <= b.f1 and a.f2 <= b.f2 and (a.f1 < b.f1 or a.f2 < b.f2)


@dataclass
class ArchiveEntry:
    mask: np.ndarray
    x_snapshot: np.ndarray
    objectives: Objectives
    order: int = -1
    meta: dict = field(default_factory=dict)

    def key(self) -> tuple[bytes, float, float]:
        return (np.packbits(self.mask).tobytes(), self.objectives.f1, self.objectives.f2)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass
class InsertResult:
    inserted: bool
    displaced: list[ArchiveEntry]


def crowding_distance(objs: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance of each row of an (E, 2) objective matrix."""
    E = objs.shape[0]
    cd = np.zeros(E)
    if E <= 2:
        cd[:] = np.inf
        return cd
    for j in range(objs.shape[1]):
        order = np.argsort(objs[:, j], kind="stable")
        span = objs[order[-1], j] - objs[order[0], j]
        cd[order[0]] = cd[order[-1]] = np.inf
        if span > 0:
            cd[order[1:-1]] += (objs[order[2:], j] - objs[order[:-2], j]) / span
    return cd


class ParetoArchive:
    """Mutually non-dominated entries kept in insertion order.

    ``tie_rule="decision"`` admits a candidate whose objectives equal an
    existing entry's when its mask differs; ``"reject"`` refuses any
    objective-space duplicate. ``prune="decision"`` removes the entry closest
    to its nearest neighbour in position space (objective extremes protected);
    ``prune="crowding"`` removes the smallest objective-space crowding distance.
    """

    def __init__(self, capacity: int = 100, tie_rule: str = "decision", prune: str = "decision"):
        if capacity < 2:
            raise ValueError("archive capacity must be >= 2")
        if tie_rule not in ("decision", "reject"):
            raise ValueError("tie_rule must be 'decision' or 'reject'")
        if prune not in ("decision", "crowding"):
            raise ValueError("prune must be 'decision' or 'crowding'")
        self.capacity = capacity
        self.tie_rule = tie_rule
        self.prune_mode = prune
        self.entries: list[ArchiveEntry] = []
        self._counter = itertools.count()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objectives_matrix(self) -> np.ndarray:
        return np.array([e.objectives.as_tuple() for e in self.entries]).reshape(-1, 2)

    def positions(self) -> np.ndarray:
        return np.array([e.x_snapshot for e in self.entries])

    def front_key(self) -> frozenset:
        return frozenset(e.key() for e in self.entries)

    def insert(self, cand: ArchiveEntry) -> InsertResult:
        co = cand.objectives
        for e in self.entries:
            if dominates(e.objectives, co):
                return InsertResult(False, [])
        for e in self.entries:
            if e.objectives == co:
                if self.tie_rule == "reject" or np.array_equal(e.mask, cand.mask):
                    return InsertResult(False, [])
        displaced = [e for e in self.entries if dominates(co, e.objectives)]
        if displaced:
            gone = {id(e) for e in displaced}
            self.entries = [e for e in self.entries if id(e) not in gone]
        cand.order = next(self._counter)
        self.entries.append(cand)
        if len(self.entries) > self.capacity:
            self.prune()
        return InsertResult(any(e is cand for e in self.entries), displaced)

    def prune(self) -> None:
        if self.prune_mode == "crowding":
            self._prune_crowding()
        else:
            self._prune_decision()

    def _protected(self) -> set[int]:
        objs = self.objectives_matrix()
        # lexsort keys: last is primary; ties fall back to insertion position
        best_f1 = int(np.lexsort((objs[:, 1], objs[:, 0]))[0])
        best_f2 = int(np.lexsort((objs[:, 0], objs[:, 1]))[0])
        return {best_f1, best_f2}

    def _prune_decision(self) -> None:
        while len(self.entries) > self.capacity:
            P = self.positions()
            d = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
            np.fill_diagonal(d, np.inf)
            nn = d.min(axis=1)
            for i in self._protected():
                nn[i] = np.inf
            victim = int(np.argmin(nn))
            if not np.isfinite(nn[victim]):
                break
            del self.entries[victim]

    def _prune_crowding(self) -> None:
        while len(self.entries) > self.capacity:
            cd = crowding_distance(self.objectives_matrix())
            del self.entries[int(np.argmin(cd))]

    def check_invariants(self) -> None:
        """Raise AssertionError if non-dominance, uniqueness or capacity is violated."""
        assert len(self.entries) <= self.capacity, "archive over capacity"
        for a, b in itertools.combinations(self.entries, 2):
            assert not dominates(a.objectives, b.objectives), "dominated pair in archive"
            assert not dominates(b.objectives, a.objectives), "dominated pair in archive"
            assert not (a.objectives == b.objectives and np.array_equal(a.mask, b.mask)), "duplicate entry"


def nondominated(items, objectives=lambda it: it.objectives) -> list:
    """Items not dominated by any other item (brute force, order preserved)."""
    objs = [objectives(it) for it in items]
    return [it for it, o in zip(items, objs) if not any(dominates(p, o) for p in objs)]
