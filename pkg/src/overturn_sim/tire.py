"""Tire forces: unilateral vertical contact and load-proportional cornering.

Vertical force is a linear spring-damper acting only in compression.  Lateral
force is computed per axle; its capacity scales with the axle's vertical load
and saturates at the friction limit, so an unloaded axle produces no cornering
force at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit


@dataclass(frozen=True)
class TireParams:
    k_t: float = 2.0e5
    c_t: float = 1.5e3
    c_alpha: float = 8.0
    mu: float = 0.7
    u_min: float = 0.2

    def validate(self) -> None:
        if not self.k_t > 0:
            raise ValueError(f"k_t must be > 0, got {self.k_t!r}")
        if not self.c_t >= 0:
            raise ValueError(f"c_t must be >= 0, got {self.c_t!r}")
        if not self.c_alpha > 0:
            raise ValueError(f"c_alpha must be > 0, got {self.c_alpha!r}")
        if not 0 < self.mu <= 1.5:
            raise ValueError(f"mu must lie in (0, 1.5], got {self.mu!r}")
        if not self.u_min > 0:
            raise ValueError(f"u_min must be > 0, got {self.u_min!r}")


@dataclass(frozen=True)
class WheelLoads:
    """Contact forces at one instant. Wheel order is FL, FR, RL, RR."""

    fz_fl: float
    fz_fr: float
    fz_rl: float
    fz_rr: float
    fy_front: float = 0.0
    fy_rear: float = 0.0
    alpha_front: float = 0.0
    alpha_rear: float = 0.0

    @property
    def fz_front(self) -> float:
        return self.fz_fl + self.fz_fr

    @property
    def fz_rear(self) -> float:
        return self.fz_rl + self.fz_rr

    @property
    def fz_total(self) -> float:
        return self.fz_front + self.fz_rear


@njit(cache=True, nogil=True)
def _vertical_force(deflection, rate, k_t, c_t):
    if deflection <= 0.0:
        return 0.0
    f = k_t * deflection + c_t * rate
    return f if f > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _axle_cornering_force(fz_axle, alpha, c_alpha, mu):
    if fz_axle <= 0.0 or alpha == 0.0:
        return 0.0
    mag = min(c_alpha * fz_axle * abs(alpha), mu * fz_axle)
    return -mag if alpha > 0.0 else mag


@njit(cache=True, nogil=True)
def _slip_angles(u, v, r, steer, a, b, u_min):
    if abs(u) < u_min:
        return 0.0, 0.0
    return math.atan2(v + a * r, u) - steer, math.atan2(v - b * r, u)


def vertical_force(deflection: float, deflection_rate: float, p: TireParams) -> float:
    """Normal force of one wheel; zero whenever the tire is not compressed.

    Damping can reduce the force but never make it tensile.
    """
    return float(_vertical_force(float(deflection), float(deflection_rate), p.k_t, p.c_t))


def axle_cornering_force(fz_axle: float, alpha: float, p: TireParams) -> float:
    """Lateral force of one axle, opposing the slip angle.

    Raises
    ------
    ValueError
        If `fz_axle` is negative.
    """
    if fz_axle < 0:
        raise ValueError(f"axle load must be non-negative, got {fz_axle!r} N")
    return float(_axle_cornering_force(float(fz_axle), float(alpha), p.c_alpha, p.mu))


def slip_angles(u: float, v: float, r: float, steer: float, a: float, b: float,
                u_min: float = 0.2) -> tuple[float, float]:
    """Single-track front and rear slip angles (rad).

    Below `u_min` forward speed both angles are reported as zero.
    """
    af, ar = _slip_angles(float(u), float(v), float(r), float(steer), float(a), float(b),
                          float(u_min))
    return float(af), float(ar)
