"""Run configuration files.

A configuration is an INI file with the sections ``[tractor]``, ``[tires]``,
``[terrain]``, ``[driver]`` and ``[sim]``.  Keys are the parameter names of the
corresponding dataclasses, values are SI (lengths in m, angles in rad).
Missing keys keep their defaults; unknown sections or keys are errors.

Example::

    [tractor]
    h_cg = 0.8

    [terrain]
    gradient = 0.3316125578789226   # 19 deg

    [driver]
    speed_target = 4.3

The same structure as nested JSON objects is accepted too, which is what
:func:`config_to_dict` produces for the run summary.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
from pathlib import Path

from overturn_sim.driver import DriverParams
from overturn_sim.dynamics import TractorParams
from overturn_sim.sim import SimConfig
from overturn_sim.terrain import RoadGeometry, SlopeGeometry
from overturn_sim.tire import TireParams


class ConfigError(ValueError):
    """Raised for malformed, unknown or invalid configuration entries."""


def _names(cls, skip=()):
    return tuple(f.name for f in dataclasses.fields(cls) if f.name not in skip)


_TRACTOR_KEYS = _names(TractorParams, skip=("tires",))
_TIRE_KEYS = _names(TireParams)
_SLOPE_KEYS = _names(SlopeGeometry)
_ROAD_KEYS = _names(RoadGeometry)
_DRIVER_KEYS = _names(DriverParams)
_SIM_KEYS = ("dt", "t_end", "settle_time", "start_x", "heading", "origin_x", "origin_y")

SECTIONS = {
    "tractor": _TRACTOR_KEYS,
    "tires": _TIRE_KEYS,
    "terrain": _SLOPE_KEYS + _ROAD_KEYS + ("field_elevation",),
    "driver": _DRIVER_KEYS,
    "sim": _SIM_KEYS,
}


def config_to_dict(cfg: SimConfig) -> dict:
    """Every configurable parameter, grouped by section (scenario excluded)."""
    terrain = {k: getattr(cfg.slope, k) for k in _SLOPE_KEYS}
    terrain.update({k: getattr(cfg.road, k) for k in _ROAD_KEYS})
    terrain["field_elevation"] = cfg.field_elevation
    return {
        "tractor": {k: getattr(cfg.tractor, k) for k in _TRACTOR_KEYS},
        "tires": {k: getattr(cfg.tractor.tires, k) for k in _TIRE_KEYS},
        "terrain": terrain,
        "driver": {k: getattr(cfg.driver, k) for k in _DRIVER_KEYS},
        "sim": {"dt": cfg.dt, "t_end": cfg.t_end, "settle_time": cfg.settle_time,
                "start_x": cfg.start_x, "heading": cfg.heading,
                "origin_x": cfg.origin[0], "origin_y": cfg.origin[1]},
    }


def _number(section, key, raw) -> float:
    if isinstance(raw, bool):
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}")
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: value must be finite, got {raw!r}")
    return value


def config_from_dict(data: dict, base: SimConfig | None = None) -> SimConfig:
    """Overlay sectioned parameter values onto `base` (defaults if None).

    Raises
    ------
    ConfigError
        On an unknown section or key, a non-numeric value, or parameters that
        fail validation.
    """
    base = base or SimConfig()
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    values = {}
    for section, entries in data.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of "
                              f"{', '.join(SECTIONS)}")
        if not isinstance(entries, dict):
            raise ConfigError(f"section [{section}] must be a mapping of keys")
        for key, raw in entries.items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            values[section, key] = _number(section, key, raw)

    def pick(section, keys):
        return {k: values[section, k] for k in keys if (section, k) in values}

    tires = dataclasses.replace(base.tractor.tires, **pick("tires", _TIRE_KEYS))
    tractor = dataclasses.replace(base.tractor, tires=tires,
                                  **pick("tractor", _TRACTOR_KEYS))
    slope = dataclasses.replace(base.slope, **pick("terrain", _SLOPE_KEYS))
    road = dataclasses.replace(base.road, **pick("terrain", _ROAD_KEYS))
    driver = dataclasses.replace(base.driver, **pick("driver", _DRIVER_KEYS))
    sim = pick("sim", _SIM_KEYS)
    origin = (sim.pop("origin_x", base.origin[0]), sim.pop("origin_y", base.origin[1]))
    field_elev = values.get(("terrain", "field_elevation"), base.field_elevation)
    cfg = dataclasses.replace(base, tractor=tractor, slope=slope, road=road, driver=driver,
                              origin=origin, field_elevation=field_elev, **sim)
    try:
        cfg.validate()
        cfg.build_terrain()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_ini(text: str, base: SimConfig | None = None) -> SimConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       default_section="__defaults__")
    # keep key case so a mistyped key is reported as written
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    data = {name: dict(parser.items(name)) for name in parser.sections()}
    return config_from_dict(data, base)


def load_config(path: str | Path | None, base: SimConfig | None = None) -> SimConfig:
    """Read an INI or JSON configuration file; None gives the defaults.

    A JSON run summary is accepted as well: its ``config`` member is used.
    """
    if path is None:
        return config_from_dict({}, base)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {str(path)!r}: {exc.strerror}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON configuration: {exc}") from exc
        if isinstance(data.get("config"), dict):
            data = data["config"]
        return config_from_dict(data, base)
    return parse_ini(text, base)
