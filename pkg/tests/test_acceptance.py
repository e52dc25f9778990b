"""End-to-end acceptance checks, one test per criterion.

Each test reports a single PASS/FAIL line (collected in the terminal summary)
and then asserts.  Run on its own with::

    pytest tests/test_acceptance.py -v
"""

import dataclasses
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from overturn_sim.cli import main
from overturn_sim.driver import DriverParams
from overturn_sim.dynamics import (
    Controls,
    TractorParams,
    VehicleState,
    mechanical_energy,
    wheel_loads,
)
from overturn_sim.sim import SimConfig, initial_state, rk4_integrate, rk4_step, run, sweep
from overturn_sim.terrain import Scenario, build_scenario
from overturn_sim.tire import TireParams, axle_cornering_force, vertical_force

GOLDEN = Path(__file__).parent / "golden"
SAMPLES = 10_000


def _timed_cli(args):
    t0 = time.perf_counter()
    code = main(args)
    return code, time.perf_counter() - t0


def test_1_scenario_dichotomy(tmp_path, acceptance):
    slope_code, slope_s = _timed_cli(["simulate", "--scenario", "slope",
                                      "--out-csv", str(tmp_path / "s.csv"),
                                      "--out-json", str(tmp_path / "s.json")])
    flat_code, flat_s = _timed_cli(["simulate", "--scenario", "flat",
                                    "--out-csv", str(tmp_path / "f.csv"),
                                    "--out-json", str(tmp_path / "f.json")])
    slope = json.loads((tmp_path / "s.json").read_text())
    flat = json.loads((tmp_path / "f.json").read_text())
    t = {e["kind"]: e["t"] for e in slope["events"]}
    ordered = ({"FrontAxleLiftoff", "OffRoad", "Rollover"} <= set(t)
               and t["FrontAxleLiftoff"] <= t["OffRoad"] <= t["Rollover"])
    rows = np.genfromtxt(tmp_path / "f.csv", delimiter=",", names=True)
    min_front = float(np.min(rows["fz_fl"] + rows["fz_fr"]))
    ok = (slope_code == 10 and slope["terminal_status"] == "RolledOver" and ordered
          and flat_code == 0 and flat["terminal_status"] == "Completed"
          and flat["events"] == [] and min_front > 0 and max(slope_s, flat_s) < 5.0)
    detail = (f"slope exit {slope_code} events {t}; flat exit {flat_code} "
              f"events {len(flat['events'])} min front load {min_front:.0f} N; "
              f"runtime {slope_s:.2f}/{flat_s:.2f} s")
    assert acceptance(1, "scenario dichotomy", ok, detail)


def test_2_mechanism_trace(acceptance):
    out = run(SimConfig())
    cfg = out.config
    terrain = cfg.build_terrain()
    fz = out.fz_front
    fy = out.channels["fy_front"]
    k = int(np.argmax(fz <= 1.0)) if np.any(fz <= 1.0) else None
    ch = out.channels
    if k is None:
        front_x = math.nan
    else:
        xw = ch["x"][k] + cfg.tractor.a_cg * math.cos(ch["psi"][k])
        yw = ch["y"][k] + cfg.tractor.a_cg * math.sin(ch["psi"][k])
        front_x = float(terrain.to_local(xw, yw)[0])
    on_ramp = cfg.slope.ramp_start_x <= front_x <= terrain.crest_x
    zero = fz == 0.0
    killed = bool(np.all(fy[zero] == 0.0))
    ok = fz.min() <= 1.0 and on_ramp and killed and zero.any()
    detail = (f"min front load {fz.min():.3g} N first at x={front_x:.2f} m "
              f"(ramp {cfg.slope.ramp_start_x:.2f}..{terrain.crest_x:.2f}); "
              f"{int(zero.sum())} zero-load samples, all with fy_front == 0: {killed}")
    assert acceptance(2, "mechanism trace", ok, detail)


def test_3_static_equilibrium(acceptance):
    total_oracle = (788 + 200) * 9.81
    front_oracle = 788 * 9.81 * 0.64 / (0.7 + 0.64) + 100 * 9.81
    cfg = SimConfig(scenario=Scenario.WITHOUT_SLOPE, driver=DriverParams(speed_target=0.0))
    s = VehicleState.from_array(initial_state(cfg))
    w = wheel_loads(s, Controls(), cfg.build_terrain(), cfg.tractor)
    e_total = abs(w.fz_total / total_oracle - 1)
    e_front = abs(w.fz_front / front_oracle - 1)
    ok = e_total <= 1e-3 and e_front <= 1e-2
    detail = (f"total {w.fz_total:.2f} N vs {total_oracle:.2f} ({e_total:.1e}); "
              f"front {w.fz_front:.1f} N vs {front_oracle:.1f} ({e_front:.1e})")
    assert acceptance(3, "static equilibrium", ok, detail)


def test_4_integrator_order(acceptance):
    omega = 10.0

    def f(y):
        return np.array([y[1], -omega**2 * y[0]])

    dts = np.array([0.02, 0.01, 0.005, 0.0025])
    errs = []
    for dt in dts:
        y = rk4_integrate(f, [1.0, 0.0], dt, int(round(1.0 / dt)))
        errs.append(np.max(np.abs(y - [math.cos(omega), -omega * math.sin(omega)])))
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])

    cfg = SimConfig(scenario=Scenario.WITHOUT_SLOPE, t_end=10.0)
    a = run(cfg)
    b = run(dataclasses.replace(cfg, dt=0.0005))
    diff = float(np.max(np.hypot(a.channels["x"] - b.channels["x"][::2],
                                 a.channels["y"] - b.channels["y"][::2])))
    ok = order >= 3.9 and diff < 0.01
    detail = f"observed order {order:.3f}; flat dt 1 ms vs 0.5 ms max deviation {diff:.2e} m"
    assert acceptance(4, "integrator order", ok, detail)


def test_5_energy_conservation(acceptance):
    p = dataclasses.replace(TractorParams(), tires=TireParams(c_t=0.0))
    terrain = build_scenario(Scenario.WITHOUT_SLOPE, track=p.track)
    arr = VehicleState(u=4.3, z=p.h_cg + 0.005, theta=0.01, phi=0.01).to_array()
    e0 = mechanical_energy(arr, terrain, p)
    drift = 0.0
    for k in range(5000):
        arr = rk4_step(arr, Controls(), terrain, p, 0.001)
        if k % 10 == 9:
            drift = max(drift, abs(mechanical_energy(arr, terrain, p) / e0 - 1))
    ok = drift < 1e-3
    assert acceptance(5, "energy conservation", ok, f"max relative drift over 5 s {drift:.2e}")


def test_6_tire_properties(acceptance):
    rng = np.random.default_rng(20240611)
    p = TireParams()
    fails = {"unilateral": 0, "zero-load": 0, "saturation": 0, "odd": 0}
    for _ in range(SAMPLES):
        d, rate = rng.uniform(-0.1, 0.1), rng.uniform(-20, 20)
        if vertical_force(d, rate, p) < 0:
            fails["unilateral"] += 1
        fz, alpha = rng.uniform(0, 3e4), rng.uniform(-1.5, 1.5)
        if axle_cornering_force(0.0, alpha, p) != 0.0:
            fails["zero-load"] += 1
        fy = axle_cornering_force(fz, alpha, p)
        if abs(fy) > p.mu * fz:
            fails["saturation"] += 1
        if axle_cornering_force(fz, -alpha, p) != -fy:
            fails["odd"] += 1
    ok = not any(fails.values())
    assert acceptance(6, "tire properties", ok, f"{SAMPLES} samples each, violations {fails}")


def test_7_sweep_structure(acceptance):
    base = SimConfig()
    column_speeds = [0.5 + 0.25 * i for i in range(31)]
    col = sweep(base, column_speeds, [math.radians(19.0)])
    seq = [row[0].status for row in col.cells]
    transitions = sum(a != b for a, b in zip(seq, seq[1:]))
    one_step = (transitions == 1 and seq[0] == "Completed" and seq[-1] == "RolledOver"
                and set(seq) <= {"Completed", "RolledOver"})
    threshold = next((v for v, s in zip(column_speeds, seq) if s == "RolledOver"), None)
    op = sweep(base, [4.3], [math.radians(19.0)]).cells[0][0].status
    flat = sweep(base, column_speeds, [0.0])
    flat_ok = all(row[0].status == "Completed" for row in flat.cells)

    speeds = [0.5 + 0.25 * i for i in range(26)]
    gradients = [math.radians(2.0 * j) for j in range(13)]
    t0 = time.perf_counter()
    grid = sweep(base, speeds, gradients)
    elapsed = time.perf_counter() - t0
    grid_flat_ok = all(grid.cells[i][0].status == "Completed" for i in range(len(speeds)))

    ok = one_step and op == "RolledOver" and flat_ok and grid_flat_ok and elapsed < 60.0
    detail = (f"19 deg column {''.join(s[0] for s in seq)} ({transitions} transition, "
              f"threshold {threshold} m/s); 4.3 m/s cell {op}; gradient-0 row all Completed: "
              f"{flat_ok and grid_flat_ok}; 13x26 grid {elapsed:.1f} s")
    assert acceptance(7, "sweep structure", ok, detail)


def test_8_determinism(tmp_path, acceptance):
    cfg = GOLDEN / "short_slope.ini"
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        main(["simulate", "--config", str(cfg), "--scenario", "slope",
              "--out-csv", str(path)])
        outs.append(path.read_bytes())
    golden = (GOLDEN / "short_slope.csv").read_bytes()
    ok = outs[0] == outs[1] == golden
    detail = (f"repeat identical: {outs[0] == outs[1]}; matches golden "
              f"{(GOLDEN / 'short_slope.csv').name}: {outs[0] == golden}")
    assert acceptance(8, "determinism", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
