import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overturn_sim.driver import (
    DriverParams,
    ReferencePath,
    pure_pursuit_steer,
    reference_path,
    speed_control,
)
from overturn_sim.dynamics import VehicleState
from overturn_sim.terrain import Scenario, build_scenario

SLOPE = build_scenario(Scenario.WITH_SLOPE)
FLAT = build_scenario(Scenario.WITHOUT_SLOPE)
P = DriverParams()
FREE = DriverParams(steer_rate_max=1e9)


def test_path_climbs_the_ramp_and_turns_right():
    path = reference_path(SLOPE)
    xs = path.xy[:, 0]
    assert xs.min() < SLOPE.slope.ramp_start_x
    assert np.any(np.isclose(xs, SLOPE.crest_x, atol=0.06))
    end = path.xy[-1]
    assert end[0] == pytest.approx(SLOPE.corner_x + SLOPE.road.corner_radius)
    assert end[1] < -SLOPE.road.corner_radius


def test_flat_path_is_the_same_polyline():
    assert np.array_equal(reference_path(SLOPE).xy, reference_path(FLAT).xy)


def test_arc_midpoint_on_circle():
    path = reference_path(SLOPE)
    xc, rad = SLOPE.corner_x, SLOPE.road.corner_radius
    mid = np.array([xc + rad * math.sin(math.pi / 4), -rad + rad * math.cos(math.pi / 4)])
    assert np.min(np.hypot(*(path.xy - mid).T)) < 0.1


def test_path_spacing_and_arc_length():
    path = ReferencePath([[0, 0], [1, 0], [1, 2]], spacing=0.3)
    assert path.length == pytest.approx(3.0)
    assert np.max(np.diff(path.s)) <= 0.3 + 1e-12
    assert path.point_at(1.5) == pytest.approx((1.0, 0.5))
    with pytest.raises(ValueError):
        ReferencePath([[0, 0]])


def test_on_path_and_aligned_gives_zero():
    path = ReferencePath([[-10, 0], [20, 0]])
    assert pure_pursuit_steer(VehicleState(), path, P, 0.0, 0.001) == 0.0


def test_goal_ninety_degrees_left():
    path = ReferencePath([[0, 0], [0, 10]])
    steer = pure_pursuit_steer(VehicleState(), path, FREE, 0.0, 0.001)
    assert steer == pytest.approx(math.atan(1.34 * 2.0 / 3.0), abs=1e-12)
    assert steer == pytest.approx(0.729, abs=1e-3)


def test_rate_limit_binds():
    path = ReferencePath([[0, 0], [0, 10]])
    assert pure_pursuit_steer(VehicleState(), path, P, 0.0, 0.001) == pytest.approx(0.0006)


def test_angle_clamp():
    path = ReferencePath([[0, 0], [0, 10]])
    p = DriverParams(steer_max=0.3, steer_rate_max=1e9)
    assert pure_pursuit_steer(VehicleState(), path, p, 0.0, 0.001) == 0.3


def test_speed_control_examples():
    assert speed_control(4.3, P) == 0.0
    assert speed_control(4.0, DriverParams(speed_gain=2000.0)) == pytest.approx(600.0)
    assert speed_control(10.0, DriverParams(force_max=3000.0)) == -3000.0


def test_params_validate():
    with pytest.raises(ValueError, match="lookahead"):
        DriverParams(lookahead=0.0).validate()
    with pytest.raises(ValueError, match="steer_max"):
        DriverParams(steer_max=2.0).validate()


poses = st.tuples(st.floats(-5, 25), st.floats(-8, 4), st.floats(-math.pi, math.pi))


@settings(max_examples=500, deadline=None)
@given(pose=poses, prev=st.floats(-0.78, 0.78), dt=st.floats(1e-4, 1e-2))
def test_output_respects_clamp_and_rate(pose, prev, dt):
    path = reference_path(SLOPE)
    s = VehicleState(x=pose[0], y=pose[1], psi=pose[2])
    steer = pure_pursuit_steer(s, path, P, prev, dt)
    assert abs(steer) <= P.steer_max
    assert abs(steer - prev) <= P.steer_rate_max * dt * (1 + 1e-12)


@settings(max_examples=500, deadline=None)
@given(pose=poses)
def test_mirrored_path_negates_steering(pose):
    path = reference_path(SLOPE)
    mirror = ReferencePath(path.xy * [1.0, -1.0])
    x, y, psi = pose
    left = pure_pursuit_steer(VehicleState(x=x, y=y, psi=psi), path, FREE, 0.0, 0.001)
    right = pure_pursuit_steer(VehicleState(x=x, y=-y, psi=-psi), mirror, FREE, 0.0, 0.001)
    assert right == pytest.approx(-left, abs=1e-12)


@given(x=st.floats(-4.0, 5.0))
def test_zero_error_fixed_point(x):
    path = reference_path(SLOPE)
    s = VehicleState(x=x, u=P.speed_target)
    assert pure_pursuit_steer(s, path, P, 0.0, 0.001) == 0.0
    assert speed_control(s.u, P) == 0.0
