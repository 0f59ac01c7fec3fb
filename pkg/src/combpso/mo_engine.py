"""Multi-objective COMB-PSO over (CV error, subset-size fraction)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset, SplitPlan
from .oracle import ContractViolation, Objectives, WrapperOracle, mo_objectives
from .pareto import ArchiveEntry, ParetoArchive, dominates
from .schedules import ScheduleError, ScheduleParams, check_convergence_constraint, coefficients_at
from .so_engine import ConfigError, Observer, OracleFailure, StagnationTracker, turbulence_subset
from .swarm import (Bounds, Particle, decode_position, init_particle, particle_streams,
                    random_velocity, update_position, update_velocity)

LEADER_METRICS = ("euclidean", "hamming")


@dataclass(frozen=True)
class MOConfig:
    swarm_size: int
    iterations: int
    bounds: Bounds
    schedule: ScheduleParams
    theta: int = 5
    gamma: float = 0.2
    seed: int = 0
    archive_capacity: int = 100
    leader_metric: str = "euclidean"
    dynamic_population: bool = True
    turbulence: bool = True
    per_dimension_random: bool = False

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ConfigError("swarm_size must be >= 2")
        if not 1 <= self.theta < self.iterations:
            raise ConfigError(f"need 1 <= theta < iterations (theta={self.theta}, T={self.iterations})")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must lie in (0, 1]")
        if self.archive_capacity < 2:
            raise ConfigError("archive_capacity must be >= 2")
        if self.leader_metric not in LEADER_METRICS:
            raise ConfigError(f"leader_metric must be one of {LEADER_METRICS}")
        if self.schedule.T != self.iterations:
            raise ConfigError("schedule horizon T must equal iterations")


@dataclass
class MORunResult:
    archive: ParetoArchive
    function_calls: int
    test_errors: list[float] = field(default_factory=list)
    archive_sizes: list[int] = field(default_factory=list)
    turbulence_events: int = 0
    replacements: int = 0

    @property
    def entries(self) -> list[ArchiveEntry]:
        return self.archive.entries


def select_leader(p: Particle, entries: list[ArchiveEntry], metric: str = "euclidean",
                  positions: np.ndarray | None = None) -> ArchiveEntry:
    """Archive entry nearest to the particle in decision space; oldest wins ties.

    ``entries`` must be in insertion order. ``positions`` optionally caches
    the stacked snapshots (or masks for Hamming distance).
    """
    if not entries:
        raise ContractViolation("leader requested from an empty archive")
    if metric == "hamming":
        P = positions if positions is not None else np.array([e.mask for e in entries])
        d = np.count_nonzero(P != p.b, axis=1)
    else:
        P = positions if positions is not None else np.array([e.x_snapshot for e in entries])
        d = np.sqrt(((P - p.x) ** 2).sum(axis=1))
    return entries[int(np.argmin(d))]


def update_pbest_mo(p: Particle, new: Objectives, rng: np.random.Generator) -> bool:
    """Replace pbest on dominance, keep it when dominated, else flip a fair coin."""
    old = p.pbest_score
    if old is None or dominates(new, old):
        replace = True
    elif dominates(old, new):
        replace = False
    else:
        replace = bool(rng.random() < 0.5)
    if replace:
        p.pbest_x, p.pbest_b, p.pbest_score = p.x.copy(), p.b.copy(), new
    return replace


def weakness_order(objs: list[Objectives], archive: ParetoArchive) -> list[int]:
    """Particle indices from weakest: most dominating archive entries, then larger f1, then index."""
    counts = [sum(dominates(e.objectives, o) for e in archive.entries) for o in objs]
    return sorted(range(len(objs)), key=lambda i: (-counts[i], -objs[i].f1, i))


def _objectives(oracle, mask, n, t, i) -> Objectives:
    try:
        err = oracle.evaluate(mask)
    except Exception as exc:
        raise OracleFailure(f"oracle failed at iteration {t}, particle {i}: {exc}") from exc
    return mo_objectives(err, int(np.count_nonzero(mask)), n)


def run_mo(cfg: MOConfig, ds: Dataset, split: SplitPlan, oracle=None,
           observer: Observer | None = None) -> MORunResult:
    """Evolve a Pareto archive of (CV error, |S|/|F|).

    Leaders come from a frozen per-iteration archive snapshot; inserts are
    applied at the iteration barrier in particle-index order. ``observer``
    receives ``"insert"``, ``"replacement"``, ``"turbulence"`` and
    ``"iteration"`` events.
    """
    oracle = oracle if oracle is not None else WrapperOracle(ds, split)
    n, S = ds.n, cfg.swarm_size
    calls0 = oracle.calls
    streams = particle_streams(cfg.seed, S)
    engine_rng = streams[S]
    archive = ParetoArchive(cfg.archive_capacity, tie_rule="decision", prune="decision")
    swarm: list[Particle] = [init_particle(n, cfg.bounds, streams[i]) for i in range(S)]
    current: list[Objectives] = []
    for i, p in enumerate(swarm):
        o = _objectives(oracle, p.b, n, 0, i)
        p.pbest_score = o
        current.append(o)
        archive.insert(ArchiveEntry(p.b.copy(), p.x.copy(), o))
        if observer:
            observer("insert", {"t": -1, "archive": archive})
    tracker = StagnationTracker(cfg.theta)
    tracker.push(archive.front_key())
    sizes = [len(archive)]
    n_turb = n_repl = 0

    for t in range(cfg.iterations):
        coeff = coefficients_at(t, cfg.schedule)
        if not check_convergence_constraint(coeff.omega, coeff.c1, coeff.c2):
            raise ScheduleError(f"coefficients at iteration {t} violate the convergence constraint")
        snapshot = list(archive.entries)
        if cfg.leader_metric == "hamming":
            cache = np.array([e.mask for e in snapshot])
        else:
            cache = np.array([e.x_snapshot for e in snapshot])
        for i, p in enumerate(swarm):
            leader = select_leader(p, snapshot, cfg.leader_metric, cache)
            v = update_velocity(p, leader.x_snapshot, coeff, cfg.bounds, p.rng, cfg.per_dimension_random)
            p.x = update_position(p, v, cfg.bounds)
            p.v = v
            p.b = decode_position(p.x, p.rng)
            current[i] = _objectives(oracle, p.b, n, t, i)
            update_pbest_mo(p, current[i], p.rng)

        displaced_heads = []
        for i, p in enumerate(swarm):
            res = archive.insert(ArchiveEntry(p.b.copy(), p.x.copy(), current[i]))
            if res.displaced:
                displaced_heads.append(res.displaced[0])
            if observer:
                observer("insert", {"t": t, "archive": archive})

        if cfg.dynamic_population and displaced_heads:
            order = weakness_order(current, archive)
            for entry, weak in zip(displaced_heads, order):
                wp = swarm[weak]
                wp.x, wp.b, current[weak] = entry.x_snapshot.copy(), entry.mask.copy(), entry.objectives
                n_repl += 1
                if observer:
                    observer("replacement", {"t": t, "weak": weak, "entry": entry, "swarm": swarm})

        if cfg.turbulence and tracker.push(archive.front_key()):
            idx = turbulence_subset(S, cfg.gamma, engine_rng)
            for j in idx:
                swarm[j].v = random_velocity(n, cfg.bounds, engine_rng)
            n_turb += 1
            if observer:
                observer("turbulence", {"t": t, "indices": idx, "swarm": swarm})
        sizes.append(len(archive))
        if observer:
            observer("iteration", {"t": t, "archive": archive, "swarm": swarm, "coeff": coeff})

    return MORunResult(
        archive=archive,
        function_calls=oracle.calls - calls0,
        test_errors=[oracle.test_error(e.mask) for e in archive.entries],
        archive_sizes=sizes,
        turbulence_events=n_turb,
        replacements=n_repl,
    )
