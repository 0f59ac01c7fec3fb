"""Reference binary PSO and crowding-distance MOPSO sharing the same oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset, SplitPlan
from .mo_engine import MORunResult, _objectives, update_pbest_mo
from .oracle import Fitness, WrapperOracle
from .pareto import ArchiveEntry, ParetoArchive, crowding_distance
from .schedules import StepCoefficients, check_convergence_constraint, linear_inertia
from .so_engine import ConfigError, SORunResult, _score
from .swarm import (Bounds, Particle, decode_position, init_particle, particle_streams,
                    repair_empty, sigmoid, update_position, update_velocity)


@dataclass(frozen=True)
class BaselineConfig:
    swarm_size: int
    iterations: int
    v_abs: float
    omega_min: float
    omega_max: float
    c1: float = 1.9
    c2: float = 1.9
    seed: int = 0
    x_abs: float | None = None
    alpha: float = 0.8
    archive_capacity: int = 100

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ConfigError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.v_abs <= 0:
            raise ConfigError("v_abs must be positive")
        if self.omega_min > self.omega_max:
            raise ConfigError("omega_min > omega_max")
        if self.archive_capacity < 2:
            raise ConfigError("archive_capacity must be >= 2")
        for w in (self.omega_min, self.omega_max):
            if not check_convergence_constraint(w, self.c1, self.c2):
                raise ConfigError(f"c1={self.c1}, c2={self.c2} violate the convergence constraint at omega={w}")

    @property
    def bounds(self) -> Bounds:
        return Bounds.symmetric(self.v_abs, self.x_abs)

    def coefficients(self, t: int) -> StepCoefficients:
        return StepCoefficients(linear_inertia(t, self.iterations, self.omega_min, self.omega_max),
                                self.c1, self.c2)


def bpso_resample(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Binary position with ``P(bit_j = 1) = S(v_j)``; an empty draw keeps the likeliest bit."""
    prob = sigmoid(v)
    return repair_empty(rng.random(v.shape[0]) < prob, prob)


def run_bpso(cfg: BaselineConfig, ds: Dataset, split: SplitPlan, oracle=None) -> SORunResult:
    """Classical binary PSO minimizing the weighted error/size fitness."""
    oracle = oracle if oracle is not None else WrapperOracle(ds, split)
    n, S = ds.n, cfg.swarm_size
    bounds = cfg.bounds
    calls0 = oracle.calls
    streams = particle_streams(cfg.seed, S)
    swarm: list[Particle] = []
    current: list[Fitness] = []
    for i in range(S):
        rng = streams[i]
        v = rng.uniform(-cfg.v_abs, cfg.v_abs, n)
        b = bpso_resample(v, rng)
        p = Particle(x=b.astype(float), v=v, b=b, pbest_x=b.astype(float), pbest_b=b.copy(), rng=rng)
        p.pbest_score = _score(oracle, b, n, cfg.alpha, 0, i)
        current.append(p.pbest_score)
        swarm.append(p)
    g = int(np.argmin([f.scalar for f in current]))
    g_b, g_fit = swarm[g].b.copy(), current[g]
    history = [g_fit.scalar]

    for t in range(cfg.iterations):
        coeff = cfg.coefficients(t)
        leader = g_b.astype(float)
        for i, p in enumerate(swarm):
            p.v = update_velocity(p, leader, coeff, bounds, p.rng)
            p.b = bpso_resample(p.v, p.rng)
            p.x = p.b.astype(float)
            current[i] = _score(oracle, p.b, n, cfg.alpha, t, i)
            if current[i].scalar < p.pbest_score.scalar:
                p.pbest_x, p.pbest_b, p.pbest_score = p.x.copy(), p.b.copy(), current[i]
        best = int(np.argmin([f.scalar for f in current]))
        if current[best].scalar < g_fit.scalar:
            g_b, g_fit = swarm[best].b.copy(), current[best]
        history.append(g_fit.scalar)

    return SORunResult(best_mask=g_b.copy(), best_fitness=g_fit, test_error=oracle.test_error(g_b),
                       function_calls=oracle.calls - calls0, history=history)


def tournament_leader(archive: ParetoArchive, cd: np.ndarray, rng: np.random.Generator) -> ArchiveEntry:
    """Binary tournament on crowding distance; a tie is settled by a coin flip."""
    E = len(archive)
    if E == 1:
        return archive.entries[0]
    i, j = rng.choice(E, size=2, replace=False)
    if cd[i] == cd[j]:
        return archive.entries[int(i if rng.random() < 0.5 else j)]
    return archive.entries[int(i if cd[i] > cd[j] else j)]


def run_mopso(cfg: BaselineConfig, ds: Dataset, split: SplitPlan, oracle=None) -> MORunResult:
    """Crowding-distance MOPSO on the same continuous encoding as COMB-PSO."""
    oracle = oracle if oracle is not None else WrapperOracle(ds, split)
    n, S = ds.n, cfg.swarm_size
    bounds = cfg.bounds
    calls0 = oracle.calls
    streams = particle_streams(cfg.seed, S)
    engine_rng = streams[S]
    archive = ParetoArchive(cfg.archive_capacity, tie_rule="reject", prune="crowding")
    swarm = [init_particle(n, bounds, streams[i]) for i in range(S)]
    current = []
    for i, p in enumerate(swarm):
        o = _objectives(oracle, p.b, n, 0, i)
        p.pbest_score = o
        current.append(o)
        archive.insert(ArchiveEntry(p.b.copy(), p.x.copy(), o))
    sizes = [len(archive)]

    for t in range(cfg.iterations):
        coeff = cfg.coefficients(t)
        cd = crowding_distance(archive.objectives_matrix())
        for i, p in enumerate(swarm):
            leader = tournament_leader(archive, cd, engine_rng)
            p.v = update_velocity(p, leader.x_snapshot, coeff, bounds, p.rng)
            p.x = update_position(p, p.v, bounds)
            p.b = decode_position(p.x, p.rng)
            current[i] = _objectives(oracle, p.b, n, t, i)
            update_pbest_mo(p, current[i], p.rng)
        for i, p in enumerate(swarm):
            archive.insert(ArchiveEntry(p.b.copy(), p.x.copy(), current[i]))
        sizes.append(len(archive))

    return MORunResult(archive=archive, function_calls=oracle.calls - calls0,
                       test_errors=[oracle.test_error(e.mask) for e in archive.entries],
                       archive_sizes=sizes)
