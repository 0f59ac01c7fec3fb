"""Time-varying inertia/acceleration coefficients and the convergence check."""

from __future__ import annotations

import math
from dataclasses import dataclass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class StepCoefficients:
    omega: float
    c1: float
    c2: float


def check_convergence_constraint(omega: float, c1: float, c2: float) -> bool:
    """``omega <= 1`` and ``0 < (c1 + c2) / 2 < 2 (1 + omega)``."""
    mean_c = (c1 + c2) / 2.0
    return omega <= 1.0 and 0.0 < mean_c < 2.0 * (1.0 + omega)


@dataclass(frozen=True)
class ScheduleParams:
    """Sigmoid schedule: ``s(t) = 1 / (1 + (t / (a T))**b_shape)``.

    ``omega`` and ``c1`` fall from their max to their min as ``s`` decays;
    ``c2`` rises from ``c_min`` to ``c_max``.
    """

    omega_min: float
    omega_max: float
    c_min: float
    c_max: float
    T: int
    a: float = 0.5
    b_shape: float = 4.0

    def __post_init__(self):
        if self.omega_min > self.omega_max:
            raise ScheduleError("omega_min > omega_max")
        if self.c_min > self.c_max:
            raise ScheduleError("c_min > c_max")
        if self.T < 1:
            raise ScheduleError("T must be >= 1")
        if not 0.0 < self.a < 1.0:
            raise ScheduleError("a must lie in (0, 1)")
        if self.b_shape <= 0:
            raise ScheduleError("b_shape must be positive")
        # c1 + c2 is constant, so the extremes of omega decide the check
        for omega in (self.omega_min, self.omega_max):
            if not check_convergence_constraint(omega, self.c_max, self.c_min):
                raise ScheduleError(
                    f"parameters violate omega <= 1 and 0 < (c1+c2)/2 < 2(1+omega) at omega={omega}"
                )


def sigmoid_decay(t: float, p: ScheduleParams) -> float:
    if t == 0:
        return 1.0
    return 1.0 / (1.0 + (t / (p.a * p.T)) ** p.b_shape)


def coefficients_at(t: int, p: ScheduleParams) -> StepCoefficients:
    if t < 0 or t > p.T:
        raise ScheduleError(f"iteration {t} outside [0, {p.T}]")
    s = sigmoid_decay(t, p)
    omega = p.omega_min + (p.omega_max - p.omega_min) * s
    if s == 1.0:
        # exact endpoints; c_min + (c_max - c_min) can round away from c_max
        return StepCoefficients(omega=p.omega_max, c1=p.c_max, c2=p.c_min)
    c1 = p.c_min + (p.c_max - p.c_min) * s
    c2 = p.c_max + (p.c_min - p.c_max) * s
    total = p.c_min + p.c_max
    if c1 + c2 != total:
        # Snap c1 to the ulp of the total so total - c1 is exact; then
        # c1 + c2 == c_min + c_max holds bit-for-bit (c1 moves by <= 1 ulp).
        quantum = math.ldexp(1.0, math.frexp(total)[1] - 53)
        c1 = round(c1 / quantum) * quantum
        c2 = total - c1
    return StepCoefficients(omega=omega, c1=c1, c2=c2)


def linear_inertia(t: int, T: int, omega_min: float, omega_max: float) -> float:
    """Linearly decreasing inertia from ``omega_max`` at t=0 to ``omega_min`` at t=T."""
    return omega_max - (omega_max - omega_min) * (t / T)
