"""Closed-loop simulation: fixed-step RK4, event detection, parameter sweeps."""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from overturn_sim import terrain as _terrain
from overturn_sim.driver import (
    APPROACH_LEAD,
    DriverParams,
    ReferencePath,
    _pure_pursuit,
    _speed_control,
    reference_path,
)
from overturn_sim.dynamics import (
    A_FY_F,
    A_FY_R,
    A_FZ_FL,
    N_AUX,
    N_STATE,
    P_A,
    PHI,
    PSI,
    TractorParams,
    U,
    VehicleState,
    X,
    Y,
    Z,
    Controls,
    _contact,
    _derivative,
)
from overturn_sim.terrain import RoadGeometry, Scenario, SlopeGeometry, Terrain

log = logging.getLogger(__name__)

CHANNELS = ("x", "y", "psi", "u", "v", "r", "z", "theta", "phi", "steer",
            "fz_fl", "fz_fr", "fz_rl", "fz_rr", "fy_front", "fy_rear", "elev_front", "ltr")
_STATE_CHANNELS = {"x": 0, "y": 1, "psi": 2, "u": 3, "v": 4, "r": 5, "z": 6, "theta": 8,
                   "phi": 10}

# columns of the per-sample auxiliary record written by the kernel
C_STEER, C_DRIVE, C_FZ_FL, C_FZ_FR, C_FZ_RL, C_FZ_RR, C_FY_F, C_FY_R, C_ELEV_F, \
    C_OFFROAD = range(10)
N_REC = 10

STATUS_COMPLETED, STATUS_ROLLED, STATUS_DIVERGED = 0, 1, 2

LIFTOFF_WINDOW = 0.010
LIFTOFF_FORCE_EPS = 1.0
NEAREST_WINDOW = 100


class TerminalStatus(enum.Enum):
    COMPLETED = "Completed"
    ROLLED_OVER = "RolledOver"
    ABORTED = "Aborted"


class EventKind(enum.Enum):
    FRONT_AXLE_LIFTOFF = "FrontAxleLiftoff"
    OFF_ROAD = "OffRoad"
    ROLLOVER = "Rollover"


_KIND_ORDER = {k: i for i, k in enumerate(EventKind)}


@dataclass(frozen=True)
class Event:
    kind: EventKind
    t: float
    state: VehicleState | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario = Scenario.WITH_SLOPE
    slope: SlopeGeometry = field(default_factory=SlopeGeometry)
    road: RoadGeometry = field(default_factory=RoadGeometry)
    tractor: TractorParams = field(default_factory=TractorParams)
    driver: DriverParams = field(default_factory=DriverParams)
    dt: float = 0.001
    t_end: float = 15.0
    settle_time: float = 2.0
    start_x: float = 2.0
    field_elevation: float = 0.0
    origin: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0

    def validate(self) -> None:
        if not 0 < self.dt <= 0.01:
            raise ValueError(f"dt must lie in (0, 0.01] s, got {self.dt!r}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end!r}")
        if not self.settle_time >= 0:
            raise ValueError(f"settle_time must be >= 0, got {self.settle_time!r}")
        if self.start_x < self.slope.ramp_start_x - APPROACH_LEAD:
            raise ValueError(
                f"start_x must be within {APPROACH_LEAD:g} m before ramp_start_x")
        self.tractor.validate()
        self.driver.validate()

    def build_terrain(self) -> Terrain:
        return _terrain.build_scenario(self.scenario, self.slope, self.road,
                                       track=self.tractor.track,
                                       field_elevation=self.field_elevation,
                                       origin=self.origin, heading=self.heading)


@dataclass
class SimOutput:
    t: np.ndarray
    channels: dict[str, np.ndarray]
    states: np.ndarray
    offroad: np.ndarray
    events: list[Event]
    status: TerminalStatus
    config: SimConfig
    message: str = ""

    def __len__(self) -> int:
        return len(self.t)

    def event(self, kind: EventKind) -> Event | None:
        for ev in self.events:
            if ev.kind is kind:
                return ev
        return None

    @property
    def fz_front(self) -> np.ndarray:
        return self.channels["fz_fl"] + self.channels["fz_fr"]


@njit(cache=True, nogil=True)
def _rk4(s, steer, drive, t, p, dt, planar, out, work):
    k1, k2, k3, k4, tmp, aux = work[0], work[1], work[2], work[3], work[4], work[5]
    _derivative(s, steer, drive, t, p, planar, k1, aux)
    for i in range(s.shape[0]):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _derivative(tmp, steer, drive, t, p, planar, k2, aux)
    for i in range(s.shape[0]):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _derivative(tmp, steer, drive, t, p, planar, k3, aux)
    for i in range(s.shape[0]):
        tmp[i] = s[i] + dt * k3[i]
    _derivative(tmp, steer, drive, t, p, planar, k4, aux)
    for i in range(s.shape[0]):
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def _settle(s, t, p, dt, n):
    work = np.zeros((6, N_STATE))
    nxt = np.empty(N_STATE)
    for _ in range(n):
        _rk4(s, 0.0, 0.0, t, p, dt, False, nxt, work)
        s[:] = nxt


@njit(cache=True, nogil=True)
def _closed_loop(s0, t, p, path_xy, path_s, drv, wheelbase, dt, n_steps, tip,
                 states, rec):
    """Run the driver + vehicle loop; returns (samples recorded, status)."""
    work = np.zeros((6, N_STATE))
    ds = np.empty(N_STATE)
    aux = np.empty(N_AUX)
    s = s0.copy()
    nxt = np.empty(N_STATE)
    prev = 0.0
    hint = -1
    for k in range(n_steps + 1):
        steer, hint = _pure_pursuit(s[X], s[Y], s[PSI], path_xy, path_s, drv[0], wheelbase,
                                    drv[1], drv[2], prev, dt, hint, NEAREST_WINDOW)
        drive = _speed_control(s[U], drv[3], drv[4], drv[5])
        _derivative(s, steer, drive, t, p, True, ds, aux)
        states[k] = s
        rec[k, C_STEER] = steer
        rec[k, C_DRIVE] = drive
        for i in range(4):
            rec[k, C_FZ_FL + i] = aux[A_FZ_FL + i]
        rec[k, C_FY_F] = aux[A_FY_F]
        rec[k, C_FY_R] = aux[A_FY_R]
        c = math.cos(s[PSI])
        sn = math.sin(s[PSI])
        rec[k, C_ELEV_F] = _terrain._elevation(t, s[X] + p[P_A] * c, s[Y] + p[P_A] * sn)
        off = 0.0
        for i in range(4):
            _, _, xw, yw = _contact(s, t, p, i)
            if not _terrain._on_road(t, xw, yw):
                off = 1.0
        rec[k, C_OFFROAD] = off
        if abs(s[PHI]) > tip:
            return k + 1, STATUS_ROLLED
        if k == n_steps:
            break
        _rk4(s, steer, drive, t, p, dt, True, nxt, work)
        for i in range(N_STATE):
            if not math.isfinite(nxt[i]):
                return k + 1, STATUS_DIVERGED
        s[:] = nxt
        prev = steer
    return n_steps + 1, STATUS_COMPLETED


def rk4_step(s, c: Controls, terrain: Terrain, params: TractorParams, dt: float):
    """Advance the vehicle state by one classical RK4 step, controls held.

    Accepts a `VehicleState` or a 12-element array and returns the same kind.

    Raises
    ------
    FloatingPointError
        If the step produces non-finite values.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    arr = s.to_array() if isinstance(s, VehicleState) else np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("state has non-finite components")
    out = np.empty(N_STATE)
    _rk4(arr, float(c.steer), float(c.drive_force), terrain.packed, params.pack(), float(dt),
         True, out, np.zeros((6, N_STATE)))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("RK4 step produced non-finite state")
    return VehicleState.from_array(out) if isinstance(s, VehicleState) else out


def rk4_integrate(f, y0, dt: float, n: int) -> np.ndarray:
    """Classical RK4 on an arbitrary autonomous ODE ``y' = f(y)``.

    Same update rule as the vehicle stepper; used to check the scheme on
    problems with closed-form solutions.
    """
    y = np.asarray(y0, dtype=float)
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def initial_state(config: SimConfig, terrain: Terrain | None = None) -> np.ndarray:
    """State after the vertical settling phase, with speed set to target."""
    terrain = terrain or config.build_terrain()
    p = config.tractor.pack()
    xw, yw = terrain.to_world(config.start_x, 0.0)
    s = np.zeros(N_STATE)
    s[X], s[Y], s[PSI] = float(xw), float(yw), config.heading
    s[Z] = _terrain.elevation_at(terrain, s[X], s[Y]) + config.tractor.h_cg
    _settle(s, terrain.packed, p, config.dt, int(round(config.settle_time / config.dt)))
    s[U] = config.driver.speed_target
    return s


def detect_events(t, fz_front, offroad, phi, tip_angle: float, states=None,
                  window: float = LIFTOFF_WINDOW, force_eps: float = LIFTOFF_FORCE_EPS
                  ) -> list[Event]:
    """Scan a recorded history for the first occurrence of each event kind.

    FrontAxleLiftoff is stamped at the onset of the first stretch during
    which the front-axle load stays below `force_eps` for at least `window`
    seconds.  OffRoad is the first sample with any wheel off the road.
    Rollover is the first sample whose roll angle exceeds `tip_angle`; it is
    terminal, so nothing after it is reported.
    """
    t = np.asarray(t, dtype=float)
    fz_front = np.asarray(fz_front, dtype=float)
    events = []

    def snap(k):
        return None if states is None else VehicleState.from_array(states[k])

    tip = np.flatnonzero(np.abs(np.asarray(phi)) > tip_angle)
    end = len(t) if tip.size == 0 else tip[0] + 1
    if tip.size:
        events.append(Event(EventKind.ROLLOVER, float(t[tip[0]]), snap(tip[0])))

    if len(t) > 1:
        dt = float(t[1] - t[0])
        need = max(1, math.ceil(window / dt - 1e-9))
        low = fz_front[:end] < force_eps
        run = 0
        for k in range(end):
            run = run + 1 if low[k] else 0
            if run >= need:
                onset = k - need + 1
                events.append(Event(EventKind.FRONT_AXLE_LIFTOFF, float(t[onset]),
                                    snap(onset)))
                break

    off = np.flatnonzero(np.asarray(offroad[:end], dtype=bool))
    if off.size:
        events.append(Event(EventKind.OFF_ROAD, float(t[off[0]]), snap(off[0])))
    events.sort(key=lambda e: (e.t, _KIND_ORDER[e.kind]))
    return events


def run(config: SimConfig) -> SimOutput:
    """Settle, then drive the course until `t_end` or rollover.

    A diverging integration ends the run early with status ABORTED and the
    samples recorded so far.

    Raises
    ------
    ValueError
        If the configuration is invalid.
    """
    config.validate()
    terrain = config.build_terrain()
    path = reference_path(terrain)
    tractor = config.tractor
    s0 = initial_state(config, terrain)

    n_steps = int(round(config.t_end / config.dt))
    states = np.zeros((n_steps + 1, N_STATE))
    rec = np.zeros((n_steps + 1, N_REC))
    d = config.driver
    drv = np.array([d.lookahead, d.steer_max, d.steer_rate_max, d.speed_target,
                    d.speed_gain, d.force_max])
    n, code = _closed_loop(s0, terrain.packed, tractor.pack(), path.xy, path.s, drv,
                           tractor.wheelbase, config.dt, n_steps, tractor.tip_angle,
                           states, rec)
    states, rec = states[:n], rec[:n]
    t = np.arange(n) * config.dt
    channels = _channels(states, rec)
    offroad = rec[:, C_OFFROAD] > 0.5
    events = detect_events(t, channels["fz_fl"] + channels["fz_fr"], offroad,
                           channels["phi"], tractor.tip_angle, states)
    message = ""
    if code == STATUS_ROLLED:
        status = TerminalStatus.ROLLED_OVER
    elif code == STATUS_DIVERGED:
        status = TerminalStatus.ABORTED
        message = f"integration diverged after t = {t[-1]:.3f} s"
        log.warning(message)
    else:
        status = TerminalStatus.COMPLETED
    return SimOutput(t, channels, states, offroad, events, status, config, message)


def _channels(states, rec) -> dict[str, np.ndarray]:
    ch = {name: states[:, idx].copy() for name, idx in _STATE_CHANNELS.items()}
    ch["steer"] = rec[:, C_STEER].copy()
    for i, name in enumerate(("fz_fl", "fz_fr", "fz_rl", "fz_rr")):
        ch[name] = rec[:, C_FZ_FL + i].copy()
    ch["fy_front"] = rec[:, C_FY_F].copy()
    ch["fy_rear"] = rec[:, C_FY_R].copy()
    ch["elev_front"] = rec[:, C_ELEV_F].copy()
    left = ch["fz_fl"] + ch["fz_rl"]
    right = ch["fz_fr"] + ch["fz_rr"]
    ch["ltr"] = np.clip((left - right) / np.maximum(1.0, left + right), -1.0, 1.0)
    return {name: ch[name] for name in CHANNELS}


# -- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    speed: float
    gradient: float
    status: str
    t_liftoff: float | None = None
    t_offroad: float | None = None
    t_rollover: float | None = None
    message: str = ""


@dataclass
class StabilityMap:
    """Sweep results; ``cells[i][j]`` is speed ``speeds[i]``, gradient ``gradients[j]``."""

    speeds: list[float]
    gradients: list[float]
    cells: list[list[SweepCell]]

    def statuses(self) -> np.ndarray:
        return np.array([[c.status for c in row] for row in self.cells])

    def __iter__(self):
        for row in self.cells:
            yield from row


def course_time(config: SimConfig) -> float:
    """Time needed at target speed to drive from the start through the corner
    and 10 m beyond."""
    terrain_layout = config.slope.ramp_start_x + config.slope.run + config.road.corner_offset
    dist = terrain_layout - config.start_x + 0.5 * math.pi * config.road.corner_radius + 10.0
    return dist / config.driver.speed_target


def cell_config(base: SimConfig, speed: float, gradient: float) -> SimConfig:
    """Configuration of one sweep cell.

    Zero gradient means the flat scenario on the base layout.  The run is
    lengthened when needed so slow cells still reach the end of the corner.
    """
    driver = dataclasses.replace(base.driver, speed_target=float(speed))
    if gradient == 0:
        cfg = dataclasses.replace(base, scenario=Scenario.WITHOUT_SLOPE, driver=driver)
    else:
        slope = dataclasses.replace(base.slope, gradient=float(gradient))
        cfg = dataclasses.replace(base, scenario=Scenario.WITH_SLOPE, slope=slope,
                                  driver=driver)
    if speed > 0:
        cfg = dataclasses.replace(cfg, t_end=max(base.t_end, course_time(cfg)))
    return cfg


def _run_cell(base: SimConfig, speed: float, gradient: float) -> SweepCell:
    try:
        out = run(cell_config(base, speed, gradient))
    except (ValueError, FloatingPointError) as exc:
        return SweepCell(speed, gradient, "Error", message=str(exc))

    def when(kind):
        ev = out.event(kind)
        return None if ev is None else ev.t

    return SweepCell(speed, gradient, out.status.value,
                     when(EventKind.FRONT_AXLE_LIFTOFF), when(EventKind.OFF_ROAD),
                     when(EventKind.ROLLOVER), out.message)


def default_workers() -> int:
    env = os.environ.get("OVERTURN_SIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(base: SimConfig, speeds, gradients, workers: int | None = None) -> StabilityMap:
    """Run every (speed, gradient) pair independently.

    Failed cells are reported with status ``"Error"``; the sweep carries on.
    """
    speeds = [float(v) for v in speeds]
    gradients = [float(g) for g in gradients]
    if not speeds or not gradients:
        raise ValueError("sweep grids must be non-empty")
    workers = workers or default_workers()
    jobs = [(i, j) for i in range(len(speeds)) for j in range(len(gradients))]
    cells = [[None] * len(gradients) for _ in speeds]
    if workers == 1:
        for i, j in jobs:
            cells[i][j] = _run_cell(base, speeds[i], gradients[j])
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_cell, base, speeds[i], gradients[j]): (i, j)
                       for i, j in jobs}
            for fut, (i, j) in futures.items():
                cells[i][j] = fut.result()
    return StabilityMap(speeds, gradients, cells)
