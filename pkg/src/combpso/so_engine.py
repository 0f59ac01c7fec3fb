"""Single-objective COMB-PSO: global-best search on the weighted error/size fitness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datasets import Dataset, SplitPlan
from .oracle import Fitness, WrapperOracle, so_fitness
from .schedules import ScheduleParams, coefficients_at
from .swarm import (Bounds, Particle, decode_position, init_particle, particle_streams,
                    random_velocity, update_position, update_velocity)


class ConfigError(ValueError):
    pass


class OracleFailure(RuntimeError):
    """An oracle call raised; the message carries iteration and particle."""


@dataclass(frozen=True)
class SOConfig:
    swarm_size: int
    iterations: int
    bounds: Bounds
    schedule: ScheduleParams
    alpha: float = 0.8
    theta: int = 5
    gamma: float = 0.2
    seed: int = 0
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
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.schedule.T != self.iterations:
            raise ConfigError("schedule horizon T must equal iterations")


@dataclass
class SORunResult:
    best_mask: np.ndarray
    best_fitness: Fitness
    test_error: float
    function_calls: int
    history: list[float] = field(default_factory=list)
    turbulence_events: int = 0
    replacements: int = 0

    @property
    def selected(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.best_mask)]


class StagnationTracker:
    """Fires when the last ``theta + 1`` pushed values are equal, then starts over."""

    def __init__(self, theta: int):
        if theta < 1:
            raise ValueError("theta must be >= 1")
        self.theta = theta
        self.window: list = []

    def push(self, value) -> bool:
        self.window.append(value)
        if stagnation_fires(self.window, self.theta):
            self.window = []
            return True
        return False


def stagnation_fires(history, theta: int) -> bool:
    if len(history) < theta + 1:
        return False
    tail = history[-(theta + 1):]
    return all(v == tail[0] for v in tail)


def turbulence_subset(swarm_size: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform random ``ceil(gamma * swarm_size)`` particle indices, sorted."""
    k = min(swarm_size, math.ceil(gamma * swarm_size))
    return np.sort(rng.choice(swarm_size, size=k, replace=False))


def weakest_index(scalars: np.ndarray, exclude: int) -> int:
    """Highest current scalar (lowest index on ties), skipping ``exclude``."""
    masked = np.array(scalars, dtype=float)
    masked[exclude] = -np.inf
    return int(np.argmax(masked))


def _score(oracle, mask, n, alpha, t, i) -> Fitness:
    try:
        err = oracle.evaluate(mask)
    except Exception as exc:
        raise OracleFailure(f"oracle failed at iteration {t}, particle {i}: {exc}") from exc
    return so_fitness(err, int(np.count_nonzero(mask)), n, alpha)


Observer = Callable[[str, dict], None]


def run_so(cfg: SOConfig, ds: Dataset, split: SplitPlan, oracle=None,
           observer: Observer | None = None) -> SORunResult:
    """Minimize ``alpha * E + (1 - alpha) |S|/|F|`` with COMB-PSO.

    ``observer(event, state)`` is called with ``"iteration"``, ``"replacement"``
    and ``"turbulence"`` events (state holds the live swarm); used for
    instrumented invariant checks.
    """
    oracle = oracle if oracle is not None else WrapperOracle(ds, split)
    n, S = ds.n, cfg.swarm_size
    calls0 = oracle.calls
    streams = particle_streams(cfg.seed, S)
    engine_rng = streams[S]
    swarm: list[Particle] = [init_particle(n, cfg.bounds, streams[i]) for i in range(S)]
    current: list[Fitness] = []
    for i, p in enumerate(swarm):
        f = _score(oracle, p.b, n, cfg.alpha, 0, i)
        p.pbest_score = f
        current.append(f)
    g = int(np.argmin([f.scalar for f in current]))
    g_x, g_b, g_fit = swarm[g].x.copy(), swarm[g].b.copy(), current[g]
    history = [g_fit.scalar]
    tracker = StagnationTracker(cfg.theta)
    tracker.push(g_fit.scalar)
    n_turb = n_repl = 0

    for t in range(cfg.iterations):
        coeff = coefficients_at(t, cfg.schedule)
        leader = g_x.copy()
        for i, p in enumerate(swarm):
            v = update_velocity(p, leader, coeff, cfg.bounds, p.rng, cfg.per_dimension_random)
            p.x = update_position(p, v, cfg.bounds)
            p.v = v
            p.b = decode_position(p.x, p.rng)
            current[i] = _score(oracle, p.b, n, cfg.alpha, t, i)
            if current[i].scalar < p.pbest_score.scalar:
                p.pbest_x, p.pbest_b, p.pbest_score = p.x.copy(), p.b.copy(), current[i]

        # reduction at the iteration barrier, index order
        scalars = np.array([f.scalar for f in current])
        best = int(np.argmin(scalars))
        if scalars[best] < g_fit.scalar:
            old = (g_x, g_b, g_fit)
            g_x, g_b, g_fit = swarm[best].x.copy(), swarm[best].b.copy(), current[best]
            if cfg.dynamic_population:
                weak = weakest_index(scalars, exclude=best)
                wp = swarm[weak]
                wp.x, wp.b, current[weak] = old[0].copy(), old[1].copy(), old[2]
                n_repl += 1
                if observer:
                    observer("replacement", {"t": t, "weak": weak, "old_x": old[0], "old_b": old[1],
                                             "gbest_x": g_x, "swarm": swarm})
        history.append(g_fit.scalar)

        if cfg.turbulence and tracker.push(g_fit.scalar):
            idx = turbulence_subset(S, cfg.gamma, engine_rng)
            before = [(p.x.copy(), p.b.copy(), p.pbest_x.copy(), p.v.copy()) for p in swarm] if observer else None
            for j in idx:
                swarm[j].v = random_velocity(n, cfg.bounds, engine_rng)
            n_turb += 1
            if observer:
                observer("turbulence", {"t": t, "indices": idx, "before": before, "swarm": swarm,
                                        "gbest_x": g_x})
        if observer:
            observer("iteration", {"t": t, "gbest_scalar": g_fit.scalar, "gbest_x": g_x, "swarm": swarm,
                                    "coeff": coeff})

    return SORunResult(
        best_mask=g_b.copy(),
        best_fitness=g_fit,
        test_error=oracle.test_error(g_b),
        function_calls=oracle.calls - calls0,
        history=history,
        turbulence_events=n_turb,
        replacements=n_repl,
    )
