"""Hyperparameter columns keyed by problem width, and config builders."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .schedules import ScheduleParams
from .swarm import Bounds


@dataclass(frozen=True)
class Profile:
    n_ref: int
    omega_min: float
    omega_max: float
    c_min: float
    c_max: float
    v_abs: float
    v_max_comb: float
    x_abs: float
    swarm_size: int
    iterations: int
    theta: int = 5
    gamma: float = 0.2

    @property
    def lam(self) -> float:
        return self.v_max_comb / self.v_abs

    def comb_bounds(self) -> Bounds:
        return Bounds(-self.x_abs, self.x_abs, -self.v_abs, self.lam)

    def symmetric_bounds(self) -> Bounds:
        return Bounds.symmetric(self.v_abs, self.x_abs)

    def schedule(self, iterations: int | None = None) -> ScheduleParams:
        return ScheduleParams(self.omega_min, self.omega_max, self.c_min, self.c_max,
                              T=self.iterations if iterations is None else iterations)


# The widest column prints lambda = 1/32 next to v in [-6, 0.25]; the interval
# is used, giving lambda = 1/24.
PROFILES = (
    Profile(10, 0.4, 0.6, 1.7, 2.1, 3.0, 1.0, 3.0, 30, 300),
    Profile(100, 0.4, 0.8, 1.7, 2.1, 4.0, 0.5, 4.0, 100, 1000),
    Profile(10_000, 0.4, 1.0, 1.7, 2.1, 6.0, 0.25, 6.0, 300, 3000),
)


def profile_for(n: int) -> Profile:
    """Column whose reference width is nearest to ``n`` on a log scale."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return min(PROFILES, key=lambda p: (abs(math.log10(n) - math.log10(p.n_ref)), p.n_ref))
