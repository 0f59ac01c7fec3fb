"""Particle state, continuous velocity/position updates and sigmoid decoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .schedules import StepCoefficients


@dataclass(frozen=True)
class Bounds:
    """Position box ``[x_min, x_max]`` and asymmetric velocity box.

    ``v_max = -lam * v_min``; ``lam = 1`` gives the symmetric case.
    """

    x_min: float
    x_max: float
    v_min: float
    lam: float = 1.0

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if not self.v_min < 0:
            raise ValueError("v_min must be negative")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")

    @property
    def v_max(self) -> float:
        return -self.lam * self.v_min

    @classmethod
    def symmetric(cls, v_abs: float, x_abs: float | None = None) -> "Bounds":
        x_abs = v_abs if x_abs is None else x_abs
        return cls(-x_abs, x_abs, -v_abs, 1.0)


@dataclass
class Particle:
    x: np.ndarray
    v: np.ndarray
    b: np.ndarray
    pbest_x: np.ndarray
    pbest_b: np.ndarray
    pbest_score: Any = None
    rng: np.random.Generator | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]


def sigmoid(x):
    """Logistic transfer ``1 / (1 + exp(-x))``, overflow-safe for arrays and scalars."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def repair_empty(b: np.ndarray, prob: np.ndarray) -> np.ndarray:
    """Force the bit with the highest selection probability when ``b`` is all zero."""
    if not b.any():
        b[int(np.argmax(prob))] = True
    return b


def decode_position(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(S(x_j)) per component; never returns an empty mask."""
    prob = sigmoid(x)
    b = rng.random(x.shape[0]) < prob
    return repair_empty(b, prob)


def init_particle(n: int, bounds: Bounds, rng: np.random.Generator) -> Particle:
    if n < 1:
        raise ValueError("need n >= 1")
    x = rng.uniform(bounds.x_min, bounds.x_max, n)
    v = rng.uniform(bounds.v_min, bounds.v_max, n)
    b = decode_position(x, rng)
    return Particle(x=x, v=v, b=b, pbest_x=x.copy(), pbest_b=b.copy(), pbest_score=None, rng=rng)


def update_velocity(p: Particle, leader_x: np.ndarray, coeff: StepCoefficients, bounds: Bounds,
                    rng: np.random.Generator, per_dimension: bool = False) -> np.ndarray:
    """``w v + r1 c1 (pbest - x) + r2 c2 (leader - x)`` clamped to the velocity box.

    ``r1, r2`` are one scalar draw each per call unless ``per_dimension``.
    """
    size = p.n if per_dimension else None
    r1 = rng.random(size)
    r2 = rng.random(size)
    v = coeff.omega * p.v + r1 * coeff.c1 * (p.pbest_x - p.x) + r2 * coeff.c2 * (leader_x - p.x)
    return np.clip(v, bounds.v_min, bounds.v_max)


def update_position(p: Particle, new_v: np.ndarray, bounds: Bounds) -> np.ndarray:
    if new_v.shape != p.x.shape:
        raise ValueError("velocity and position lengths differ")
    return np.clip(p.x + new_v, bounds.x_min, bounds.x_max)


def random_velocity(n: int, bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(bounds.v_min, bounds.v_max, n)


def particle_streams(seed, count: int) -> list[np.random.Generator]:
    """Independent generators: one per particle plus one engine stream at index ``count``."""
    children = np.random.SeedSequence(seed).spawn(count + 1)
    return [np.random.default_rng(c) for c in children]
