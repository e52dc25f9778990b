"""Operator model: pure-pursuit steering along the reference path plus a
proportional speed holder."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from overturn_sim.terrain import Terrain

PATH_SPACING = 0.1
APPROACH_LEAD = 10.0
EXIT_LENGTH = 60.0


@dataclass(frozen=True)
class DriverParams:
    lookahead: float = 3.0
    steer_max: float = math.radians(45.0)
    steer_rate_max: float = 0.6
    speed_target: float = 4.3
    speed_gain: float = 10000.0
    force_max: float = 6000.0

    def validate(self) -> None:
        if not self.lookahead > 0:
            raise ValueError(f"lookahead must be > 0, got {self.lookahead!r}")
        if not 0 < self.steer_max < math.pi / 2:
            raise ValueError(f"steer_max must lie in (0, 90) deg, got {self.steer_max!r}")
        if not self.steer_rate_max > 0:
            raise ValueError(f"steer_rate_max must be > 0, got {self.steer_rate_max!r}")
        if not self.speed_target >= 0:
            raise ValueError(f"speed_target must be >= 0, got {self.speed_target!r}")
        if not self.speed_gain >= 0:
            raise ValueError(f"speed_gain must be >= 0, got {self.speed_gain!r}")
        if not self.force_max > 0:
            raise ValueError(f"force_max must be > 0, got {self.force_max!r}")


class ReferencePath:
    """Polyline with a cumulative arc-length index.

    Input points are densified so no segment is longer than `spacing`.
    """

    def __init__(self, points, spacing: float = PATH_SPACING):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("a reference path needs at least two (x, y) points")
        dense = [pts[:1]]
        for p0, p1 in zip(pts[:-1], pts[1:]):
            seg = float(np.hypot(*(p1 - p0)))
            if seg <= 0.0:
                raise ValueError("reference path has repeated consecutive points")
            n = max(1, math.ceil(seg / spacing - 1e-9))
            frac = np.arange(1, n + 1)[:, None] / n
            dense.append(p0 + frac * (p1 - p0))
        self.xy = np.ascontiguousarray(np.vstack(dense))
        steps = np.hypot(*np.diff(self.xy, axis=0).T)
        self.s = np.concatenate([[0.0], np.cumsum(steps)])

    def __len__(self) -> int:
        return len(self.xy)

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def point_at(self, s: float) -> tuple[float, float]:
        x, y = _point_at(self.xy, self.s, float(s))
        return float(x), float(y)


def reference_path(terrain: Terrain) -> ReferencePath:
    """Approach lane centreline, over the ramp, 90 degree right-hand arc, exit.

    The plan-view path depends only on the shared layout, so both scenarios
    get the same polyline.
    """
    x0 = terrain.slope.ramp_start_x - APPROACH_LEAD
    xc = terrain.corner_x
    rad = terrain.road.corner_radius
    n_arc = max(2, math.ceil(rad * math.pi / 2 / PATH_SPACING))
    ang = np.linspace(0.0, math.pi / 2, n_arc + 1)
    arc = np.column_stack([xc + rad * np.sin(ang), -rad + rad * np.cos(ang)])
    exit_end = np.array([[xc + rad, -rad - EXIT_LENGTH]])
    local = np.vstack([[[x0, 0.0]], arc, exit_end])
    wx, wy = terrain.to_world(local[:, 0], local[:, 1])
    return ReferencePath(np.column_stack([wx, wy]))


@njit(cache=True, nogil=True)
def _nearest(xy, s, px, py, hint, window):
    """Arc length of the point on the polyline closest to (px, py).

    Searches segments within `window` of index `hint`, or all of them if
    `hint` is negative.  Returns (arc length, segment index).
    """
    n = xy.shape[0]
    lo, hi = 0, n - 1
    if hint >= 0:
        lo = max(0, hint - window)
        hi = min(n - 1, hint + window)
    best = np.inf
    best_s = 0.0
    best_i = lo
    for i in range(lo, hi):
        ax, ay = xy[i, 0], xy[i, 1]
        dx, dy = xy[i + 1, 0] - ax, xy[i + 1, 1] - ay
        seg2 = dx * dx + dy * dy
        f = ((px - ax) * dx + (py - ay) * dy) / seg2
        f = min(1.0, max(0.0, f))
        qx, qy = ax + f * dx - px, ay + f * dy - py
        d2 = qx * qx + qy * qy
        if d2 < best:
            best = d2
            best_s = s[i] + f * (s[i + 1] - s[i])
            best_i = i
    return best_s, best_i


@njit(cache=True, nogil=True)
def _point_at(xy, s, target):
    n = xy.shape[0]
    if target <= s[0]:
        return xy[0, 0], xy[0, 1]
    if target >= s[n - 1]:
        return xy[n - 1, 0], xy[n - 1, 1]
    i = np.searchsorted(s, target) - 1
    f = (target - s[i]) / (s[i + 1] - s[i])
    return (xy[i, 0] + f * (xy[i + 1, 0] - xy[i, 0]),
            xy[i, 1] + f * (xy[i + 1, 1] - xy[i, 1]))


@njit(cache=True, nogil=True)
def _pure_pursuit(x, y, psi, xy, s, lookahead, wheelbase, steer_max, rate_max,
                  prev, dt, hint, window):
    s_near, idx = _nearest(xy, s, x, y, hint, window)
    gx, gy = _point_at(xy, s, s_near + lookahead)
    eta = math.atan2(gy - y, gx - x) - psi
    eta = math.atan2(math.sin(eta), math.cos(eta))
    kappa = 2.0 * math.sin(eta) / lookahead
    raw = math.atan(wheelbase * kappa)
    raw = min(steer_max, max(-steer_max, raw))
    step = rate_max * dt
    return min(prev + step, max(prev - step, raw)), idx


@njit(cache=True, nogil=True)
def _speed_control(u, target, gain, force_max):
    f = gain * (target - u)
    return min(force_max, max(-force_max, f))


def pure_pursuit_steer(s, path: ReferencePath, p: DriverParams, prev_steer: float,
                       dt: float, wheelbase: float = 1.34) -> float:
    """Steering angle (rad) toward the path point one lookahead ahead.

    The goal point sits `p.lookahead` metres of arc length past the point of
    the path nearest the vehicle's reference point (its CG).  The raw
    pure-pursuit angle is clamped to ``p.steer_max`` and may move at most
    ``p.steer_rate_max * dt`` away from `prev_steer`.
    """
    if path is None or len(path) == 0:
        raise ValueError("reference path is empty")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    steer, _ = _pure_pursuit(float(s.x), float(s.y), float(s.psi), path.xy, path.s,
                             p.lookahead, wheelbase, p.steer_max, p.steer_rate_max,
                             float(prev_steer), float(dt), -1, 0)
    return float(steer)


def speed_control(u: float, p: DriverParams) -> float:
    """Proportional drive force toward the target speed, clamped to +-force_max."""
    return float(_speed_control(float(u), p.speed_target, p.speed_gain, p.force_max))
