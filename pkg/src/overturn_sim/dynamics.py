"""Reduced-order rigid-body tractor model.

Planar motion uses a single-track (bicycle) lateral/yaw model driven by the
axle cornering forces.  Heave, pitch and roll ride on four unilateral contact
springs, one per wheel, whose loads set the cornering capacity of each axle.

Sign conventions: body x forward, y left, z up.  Pitch `theta` is positive
nose-up, roll `phi` positive left-side-up.  Wheel order is FL, FR, RL, RR.

The numerical core lives in the ``_``-prefixed jitted kernels, which operate
on flat float64 arrays; the public functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from numba import njit

from overturn_sim.terrain import Terrain, _elevation, _gradient
from overturn_sim.tire import (
    TireParams,
    WheelLoads,
    _axle_cornering_force,
    _slip_angles,
    _vertical_force,
)

X, Y, PSI, U, V, R, Z, ZD, TH, THD, PHI, PHID = range(12)
N_STATE = 12

P_M, P_IP, P_IR, P_IZ, P_A, P_B, P_TRACK, P_HCG, P_G, P_KT, P_CT, P_CALPHA, \
    P_MU, P_CLEAR, P_UMIN = range(15)
N_PARAMS = 15

# aux output of the derivative kernel
A_FZ_FL, A_FZ_FR, A_FZ_RL, A_FZ_RR, A_FY_F, A_FY_R, A_ALPHA_F, A_ALPHA_R = range(8)
N_AUX = 8


@dataclass(frozen=True)
class TractorParams:
    """Tractor mass, inertia and geometry.

    `a` and `b` locate the axles relative to the body's centre of gravity.
    The wheel mass is lumped half onto each axle, which moves the combined
    centre of gravity slightly; `a_cg` and `b_cg` are measured from that
    combined point and are what the equations of motion use.
    """

    m_body: float = 788.0
    m_wheels: float = 200.0
    i_pitch: float = 700.0
    a: float = 0.7
    b: float = 0.64
    track: float = 1.2
    h_cg: float = 0.75
    i_yaw: float = 700.0
    i_roll: float = 300.0
    tires: TireParams = field(default_factory=TireParams)
    g: float = 9.81

    def validate(self) -> None:
        for name in ("m_body", "m_wheels", "i_pitch", "a", "b", "track", "h_cg",
                     "i_yaw", "i_roll", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        self.tires.validate()

    @property
    def m_total(self) -> float:
        return self.m_body + self.m_wheels

    @property
    def wheelbase(self) -> float:
        return self.a + self.b

    @property
    def cg_shift(self) -> float:
        """Forward offset of the combined CG from the body CG."""
        return 0.5 * self.m_wheels * (self.a - self.b) / self.m_total

    @property
    def a_cg(self) -> float:
        return self.a - self.cg_shift

    @property
    def b_cg(self) -> float:
        return self.b + self.cg_shift

    @property
    def tip_angle(self) -> float:
        """Static roll angle at which the CG passes over the wheel contact line."""
        return math.atan(self.track / (2.0 * self.h_cg))

    @property
    def static_deflection(self) -> float:
        """Mean static tire compression, used as the unloaded clearance."""
        return self.m_total * self.g / (4.0 * self.tires.k_t)

    def pack(self) -> np.ndarray:
        p = np.empty(N_PARAMS)
        p[P_M] = self.m_total
        p[P_IP] = self.i_pitch
        p[P_IR] = self.i_roll
        p[P_IZ] = self.i_yaw
        p[P_A] = self.a_cg
        p[P_B] = self.b_cg
        p[P_TRACK] = self.track
        p[P_HCG] = self.h_cg
        p[P_G] = self.g
        p[P_KT] = self.tires.k_t
        p[P_CT] = self.tires.c_t
        p[P_CALPHA] = self.tires.c_alpha
        p[P_MU] = self.tires.mu
        p[P_CLEAR] = self.static_deflection
        p[P_UMIN] = self.tires.u_min
        return p


@dataclass
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0
    z: float = 0.0
    z_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0
    phi: float = 0.0
    phi_dot: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "VehicleState":
        return cls(*(float(v) for v in arr))


@dataclass(frozen=True)
class Controls:
    steer: float = 0.0
    drive_force: float = 0.0


@njit(cache=True, nogil=True)
def _wheel_offsets(p, i):
    bx = p[P_A] if i < 2 else -p[P_B]
    by = 0.5 * p[P_TRACK] if i % 2 == 0 else -0.5 * p[P_TRACK]
    return bx, by


@njit(cache=True, nogil=True)
def _contact_geometry(s, p, i):
    """Vertical offset of wheel `i`'s contact point below the CG and its
    pitch/roll moment arms (the offset's partial derivatives)."""
    bx, by = _wheel_offsets(p, i)
    h = p[P_HCG]
    sth, cth = math.sin(s[TH]), math.cos(s[TH])
    sph, cph = math.sin(s[PHI]), math.cos(s[PHI])
    dz = bx * sth + by * sph - h * cth * cph
    arm_th = bx * cth + h * sth * cph
    arm_ph = by * cph + h * cth * sph
    return dz, arm_th, arm_ph


@njit(cache=True, nogil=True)
def _contact(s, t, p, i):
    """Deflection, deflection rate and world contact point of wheel `i`."""
    bx, by = _wheel_offsets(p, i)
    c = math.cos(s[PSI])
    sn = math.sin(s[PSI])
    xw = s[X] + bx * c - by * sn
    yw = s[Y] + bx * sn + by * c
    # ground-plane velocity of the contact point
    xd = s[U] * c - s[V] * sn - s[R] * (bx * sn + by * c)
    yd = s[U] * sn + s[V] * c + s[R] * (bx * c - by * sn)
    ground = _elevation(t, xw, yw)
    gx, gy = _gradient(t, xw, yw)
    dz, arm_th, arm_ph = _contact_geometry(s, p, i)
    deflection = ground - (s[Z] + dz) + p[P_CLEAR]
    rate = gx * xd + gy * yd - (s[ZD] + arm_th * s[THD] + arm_ph * s[PHID])
    return deflection, rate, xw, yw


@njit(cache=True, nogil=True)
def _derivative(s, steer, drive, t, p, planar, ds, aux):
    """Fill `ds` with d(state)/dt and `aux` with the contact forces.

    Each tire force acts along the terrain normal at its contact point, so
    it pushes the body downhill on a slope and vanishes in free flight.
    Horizontal forces act at the contact plane, `h_cg` below the CG.
    With `planar` False only heave, pitch and roll evolve (used for settling).
    """
    m = p[P_M]
    h = p[P_HCG]
    c = math.cos(s[PSI])
    sn = math.sin(s[PSI])
    sum_fz = 0.0
    pitch_moment = 0.0
    roll_moment = 0.0
    push_x = 0.0
    push_y = 0.0
    push_yaw = 0.0
    for i in range(4):
        d, rate, xw, yw = _contact(s, t, p, i)
        fz = _vertical_force(d, rate, p[P_KT], p[P_CT])
        aux[A_FZ_FL + i] = fz
        if fz == 0.0:
            continue
        _, arm_th, arm_ph = _contact_geometry(s, p, i)
        bx, by = _wheel_offsets(p, i)
        gx, gy = _gradient(t, xw, yw)
        fx_i = -fz * (gx * c + gy * sn)
        fy_i = -fz * (-gx * sn + gy * c)
        sum_fz += fz
        pitch_moment += arm_th * fz
        roll_moment += arm_ph * fz
        push_x += fx_i
        push_y += fy_i
        push_yaw += bx * fy_i - by * fx_i

    alpha_f, alpha_r = _slip_angles(s[U], s[V], s[R], steer, p[P_A], p[P_B], p[P_UMIN])
    fy_f = _axle_cornering_force(aux[A_FZ_FL] + aux[A_FZ_FR], alpha_f, p[P_CALPHA], p[P_MU])
    fy_r = _axle_cornering_force(aux[A_FZ_RL] + aux[A_FZ_RR], alpha_r, p[P_CALPHA], p[P_MU])
    aux[A_FY_F] = fy_f
    aux[A_FY_R] = fy_r
    aux[A_ALPHA_F] = alpha_f
    aux[A_ALPHA_R] = alpha_r

    # traction needs ground contact
    grip = p[P_MU] * sum_fz
    traction = min(grip, max(-grip, drive))
    fy_f_body = fy_f * math.cos(steer)
    force_x = traction + push_x
    force_y = fy_f_body + fy_r + push_y

    ds[Z] = s[ZD]
    ds[ZD] = sum_fz / m - p[P_G]
    ds[TH] = s[THD]
    ds[THD] = (pitch_moment + h * force_x) / p[P_IP]
    ds[PHI] = s[PHID]
    ds[PHID] = (roll_moment + h * force_y) / p[P_IR]

    if planar:
        ds[X] = s[U] * c - s[V] * sn
        ds[Y] = s[U] * sn + s[V] * c
        ds[PSI] = s[R]
        ds[U] = s[V] * s[R] + force_x / m
        ds[V] = -s[U] * s[R] + force_y / m
        ds[R] = (p[P_A] * fy_f_body - p[P_B] * fy_r + push_yaw) / p[P_IZ]
    else:
        for k in (X, Y, PSI, U, V, R):
            ds[k] = 0.0


def _as_array(s) -> np.ndarray:
    arr = s.to_array() if isinstance(s, VehicleState) else np.asarray(s, dtype=float)
    if arr.shape != (N_STATE,):
        raise ValueError(f"state must have {N_STATE} components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = [f.name for f, v in zip(fields(VehicleState), arr) if not math.isfinite(v)]
        raise ValueError(f"non-finite state components: {', '.join(bad)}")
    return arr


def contact_kinematics(s: VehicleState, terrain: Terrain, p: TractorParams) -> np.ndarray:
    """Per-wheel (deflection, deflection_rate), shape (4, 2), order FL, FR, RL, RR.

    Positive deflection means the tire is compressed.  Contact points rotate
    rigidly with the body in pitch and roll; at static rest on flat ground
    every deflection equals the mean static compression.
    """
    arr = _as_array(s)
    packed = p.pack()
    out = np.empty((4, 2))
    for i in range(4):
        d, rate, _, _ = _contact(arr, terrain.packed, packed, i)
        out[i] = d, rate
    return out


def state_derivative(s: VehicleState, c: Controls, terrain: Terrain,
                     p: TractorParams) -> np.ndarray:
    """Time derivative of the state, in `VehicleState` field order.

    Raises
    ------
    ValueError
        If the state has non-finite components.
    """
    arr = _as_array(s)
    ds = np.empty(N_STATE)
    aux = np.empty(N_AUX)
    _derivative(arr, float(c.steer), float(c.drive_force), terrain.packed, p.pack(), True,
                ds, aux)
    return ds


def wheel_loads(s: VehicleState, c: Controls, terrain: Terrain, p: TractorParams) -> WheelLoads:
    arr = _as_array(s)
    ds = np.empty(N_STATE)
    aux = np.empty(N_AUX)
    _derivative(arr, float(c.steer), float(c.drive_force), terrain.packed, p.pack(), True,
                ds, aux)
    return WheelLoads(*(float(v) for v in aux))


def load_transfer_ratio(w: WheelLoads) -> float:
    """Left-minus-right load over total load, clamped to [-1, 1].

    +1 means the right wheels carry nothing.
    """
    total = w.fz_fl + w.fz_fr + w.fz_rl + w.fz_rr
    ltr = ((w.fz_fl + w.fz_rl) - (w.fz_fr + w.fz_rr)) / max(1.0, total)
    return min(1.0, max(-1.0, ltr))


def mechanical_energy(s: VehicleState, terrain: Terrain, p: TractorParams) -> float:
    """Kinetic + gravitational + tire-spring energy (J).

    Conserved by the model when tire damping, drive and lateral forces are
    all absent.
    """
    arr = _as_array(s)
    m = p.m_total
    kinetic = 0.5 * m * (arr[U] ** 2 + arr[V] ** 2 + arr[ZD] ** 2)
    kinetic += 0.5 * (p.i_yaw * arr[R] ** 2 + p.i_pitch * arr[THD] ** 2
                      + p.i_roll * arr[PHID] ** 2)
    gravity = m * p.g * arr[Z]
    spring = 0.0
    for d, _ in contact_kinematics(arr, terrain, p):
        if d > 0:
            spring += 0.5 * p.tires.k_t * d * d
    return kinetic + gravity + spring
