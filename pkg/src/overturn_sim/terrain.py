"""Ground elevation field and road layout for the passage-slope scenarios.

The scene is laid out in a local frame whose +x axis runs along the approach
lane (field -> ramp -> raised road) and whose +y axis points to the driver's
left.  The ground is a prism: elevation depends on the local x coordinate only.

Along x the profile is::

    field (0) | ramp (rises at `gradient`) | road plateau (`height`) |
    embankment (falls at `embankment_gradient`) | lower ground (height - drop)

The road itself is an L-shaped strip: the approach lane continues over the
ramp crest for `corner_offset` metres, then turns right through 90 degrees on
a circular arc and runs off along -y.  The embankment sits beyond the far
(outer) edge of the road after the turn.

Without the slope the road is flush with the field and the whole surface is
level; only the plan-view road polygon remains.

A `Terrain` may be placed anywhere in the world with `origin` and `heading`;
all queries take world coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit


class Scenario(enum.Enum):
    WITH_SLOPE = "slope"
    WITHOUT_SLOPE = "flat"


class InvalidGeometry(ValueError):
    """Raised when scenario geometry violates its invariants."""


@dataclass(frozen=True)
class SlopeGeometry:
    gradient: float = math.radians(19.0)
    height: float = 0.7
    ramp_start_x: float = 5.0

    @property
    def run(self) -> float:
        """Horizontal length of the ramp."""
        return self.height / math.tan(self.gradient)

    def validate(self) -> None:
        if not 0.0 < self.gradient < math.pi / 2:
            raise InvalidGeometry(
                f"gradient must lie in (0, 90) deg, got {math.degrees(self.gradient):g} deg")
        if not self.height > 0.0:
            raise InvalidGeometry(f"height must be > 0, got {self.height:g} m")
        run = self.run
        if not (math.isfinite(run) and run > 0.0):
            raise InvalidGeometry(f"ramp run {run!r} is not finite and positive")


@dataclass(frozen=True)
class RoadGeometry:
    road_width: float = 3.0
    corner_radius: float = 3.5
    corner_turn: float = -math.pi / 2
    corner_offset: float = 2.0
    embankment_drop: float = 1.5
    embankment_gradient: float = math.radians(45.0)

    def validate(self, min_width: float = 0.0) -> None:
        if not self.road_width > 0.0:
            raise InvalidGeometry(f"road_width must be > 0, got {self.road_width:g} m")
        if not self.road_width > min_width:
            raise InvalidGeometry(
                f"road_width {self.road_width:g} m must exceed the tractor track {min_width:g} m")
        if not self.corner_radius > self.road_width / 2:
            raise InvalidGeometry(
                f"corner_radius must exceed half the road width, got {self.corner_radius:g} m")
        # The prism embankment only lines up with the road edge for a right-angle junction.
        if abs(self.corner_turn + math.pi / 2) > 1e-9:
            raise InvalidGeometry(
                f"corner_turn must be -90 deg (right-angle right turn), "
                f"got {math.degrees(self.corner_turn):g} deg")
        if self.corner_offset < 0.0:
            raise InvalidGeometry(f"corner_offset must be >= 0, got {self.corner_offset:g} m")
        if self.embankment_drop < 0.0:
            raise InvalidGeometry(
                f"embankment_drop must be >= 0, got {self.embankment_drop:g} m")
        if not 0.0 < self.embankment_gradient < math.pi / 2:
            raise InvalidGeometry("embankment_gradient must lie in (0, 90) deg")


# Layout of the packed float64 array handed to the jitted kernels.
T_X0, T_TAN_RAMP, T_HEIGHT, T_CREST, T_XC, T_RADIUS, T_WIDTH, T_XFAR, \
    T_EMB_END, T_DROP, T_TAN_EMB, T_DATUM, T_OX, T_OY, T_COS, T_SIN = range(16)
N_TERRAIN = 16


@dataclass(frozen=True)
class Terrain:
    scenario: Scenario
    slope: SlopeGeometry
    road: RoadGeometry
    field_elevation: float = 0.0
    origin: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    packed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s, r = self.slope, self.road
        raised = self.scenario is Scenario.WITH_SLOPE
        height = s.height if raised else 0.0
        # a road flush with the field has no embankment to fall from
        drop = r.embankment_drop if raised else 0.0
        tan_ramp = math.tan(s.gradient) if height > 0.0 else 0.0
        crest = s.ramp_start_x + s.run
        xc = crest + r.corner_offset
        xfar = xc + r.corner_radius + r.road_width / 2
        tan_emb = math.tan(r.embankment_gradient)
        arr = np.empty(N_TERRAIN)
        arr[T_X0] = s.ramp_start_x
        arr[T_TAN_RAMP] = tan_ramp
        arr[T_HEIGHT] = height
        arr[T_CREST] = crest
        arr[T_XC] = xc
        arr[T_RADIUS] = r.corner_radius
        arr[T_WIDTH] = r.road_width
        arr[T_XFAR] = xfar
        arr[T_EMB_END] = xfar + drop / tan_emb
        arr[T_DROP] = drop
        arr[T_TAN_EMB] = tan_emb
        arr[T_DATUM] = self.field_elevation
        arr[T_OX], arr[T_OY] = self.origin
        arr[T_COS] = math.cos(self.heading)
        arr[T_SIN] = math.sin(self.heading)
        arr.setflags(write=False)
        object.__setattr__(self, "packed", arr)

    @property
    def road_elevation(self) -> float:
        return self.field_elevation + self.packed[T_HEIGHT]

    @property
    def crest_x(self) -> float:
        """Local x of the ramp crest (where the ramp meets the road)."""
        return float(self.packed[T_CREST])

    @property
    def corner_x(self) -> float:
        """Local x where the right-turn arc begins."""
        return float(self.packed[T_XC])

    @property
    def far_edge_x(self) -> float:
        """Local x of the road's far edge, where the embankment starts."""
        return float(self.packed[T_XFAR])

    def to_world(self, xl, yl):
        c, s = self.packed[T_COS], self.packed[T_SIN]
        return (self.origin[0] + c * np.asarray(xl) - s * np.asarray(yl),
                self.origin[1] + s * np.asarray(xl) + c * np.asarray(yl))

    def to_local(self, x, y):
        return _to_local(self.packed, x, y)


def build_scenario(scenario: Scenario | str, slope: SlopeGeometry | None = None,
                   road: RoadGeometry | None = None, *, track: float = 0.0,
                   field_elevation: float = 0.0, origin=(0.0, 0.0),
                   heading: float = 0.0) -> Terrain:
    """Build the terrain for one of the two compared road surfaces.

    Both scenarios share the same plan-view layout (ramp footprint, corner,
    embankment line), so the raised slope is the only difference between them.
    The slope geometry is validated for both, since it fixes the layout.

    Raises
    ------
    InvalidGeometry
        If any geometric invariant fails; `track` is the vehicle track width
        the road must exceed.
    """
    scenario = Scenario(scenario)
    slope = slope or SlopeGeometry()
    road = road or RoadGeometry()
    slope.validate()
    road.validate(min_width=track)
    return Terrain(scenario, slope, road, field_elevation=field_elevation,
                   origin=(float(origin[0]), float(origin[1])), heading=heading)


@njit(cache=True, nogil=True)
def _to_local(t, x, y):
    dx = x - t[T_OX]
    dy = y - t[T_OY]
    return t[T_COS] * dx + t[T_SIN] * dy, -t[T_SIN] * dx + t[T_COS] * dy


@njit(cache=True, nogil=True)
def _profile(t, xl):
    """Elevation and d(elevation)/dx_local of the prism profile."""
    h = t[T_HEIGHT]
    if xl < t[T_X0]:
        return t[T_DATUM], 0.0
    if xl < t[T_CREST]:
        e = (xl - t[T_X0]) * t[T_TAN_RAMP]
        if e > h:
            e = h
        return t[T_DATUM] + e, t[T_TAN_RAMP]
    if xl < t[T_XFAR]:
        return t[T_DATUM] + h, 0.0
    if xl < t[T_EMB_END]:
        return t[T_DATUM] + h - (xl - t[T_XFAR]) * t[T_TAN_EMB], -t[T_TAN_EMB]
    return t[T_DATUM] + h - t[T_DROP], 0.0


@njit(cache=True, nogil=True)
def _elevation(t, x, y):
    xl, _ = _to_local(t, x, y)
    return _profile(t, xl)[0]


@njit(cache=True, nogil=True)
def _gradient(t, x, y):
    xl, _ = _to_local(t, x, y)
    slope = _profile(t, xl)[1]
    # rotate (slope, 0) from local into world axes
    return t[T_COS] * slope, t[T_SIN] * slope


@njit(cache=True, nogil=True)
def _on_road(t, x, y):
    xl, yl = _to_local(t, x, y)
    half = 0.5 * t[T_WIDTH]
    xc = t[T_XC]
    rad = t[T_RADIUS]
    if xl <= xc and abs(yl) <= half:
        return True
    if yl <= -rad and xc + rad - half <= xl <= xc + rad + half:
        return True
    if xl >= xc and yl >= -rad:
        d = math.hypot(xl - xc, yl + rad)
        if rad - half <= d <= rad + half:
            return True
    return False


def elevation_at(terrain: Terrain, x: float, y: float) -> float:
    """Ground elevation (m) at world point (x, y)."""
    return float(_elevation(terrain.packed, float(x), float(y)))


def surface_gradient(terrain: Terrain, x: float, y: float) -> tuple[float, float]:
    """World-frame (de/dx, de/dy) of the planar patch containing (x, y).

    On a patch boundary the patch lying on the +x (downstream) side wins.
    """
    gx, gy = _gradient(terrain.packed, float(x), float(y))
    return float(gx), float(gy)


def on_road(terrain: Terrain, x: float, y: float) -> bool:
    """True if (x, y) lies in the closed road polygon (edges count as road)."""
    return bool(_on_road(terrain.packed, float(x), float(y)))
