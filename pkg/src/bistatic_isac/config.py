"""TOML configuration for scenes, simulation and the sensing pipeline.

One file format serves both ``simulate`` and ``sense``; each command reads
the sections it needs. Every section is a flat table of keys and unknown
sections or keys are rejected. Angles are given in degrees. Example::

    [radio]
    preset = "desk"            # or "full_scale"; explicit keys override

    [scene]
    tx_position = [-80.0, -90.0, 10.0]
    snr_db = 20.0              # or noise_power = <linear>; omit both for noiseless
    sync_offsets = true
    direct_path_amplitude = 1.0

    [[target]]
    position = [45.0, -10.0, -15.0]
    velocity = [0.0, 3.0, 0.0]
    reflectivity = 0.05

    [[clutter]]
    range = 330.0              # bistatic sum-range in m, or delay = <seconds>
    amplitude = 0.5
    azimuth_deg = 20.0
    elevation_deg = -5.0

    [simulation]
    num_packets = 641
    seed = 1

    [sense]
    window_length = 64
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .detect import DetectorConfig
from .doppler import AoaGrid
from .errors import ConfigError
from .pipeline import SenseConfig
from .preprocess import PreprocConfig
from .scene import SPEED_OF_LIGHT, ClutterPath, Position3, RadioConfig, Scene, TargetSpec
from .track import TrackerConfig

_PRESETS = {"desk": RadioConfig.desk_scale, "full_scale": RadioConfig.full_scale}

_SECTIONS = {"radio", "scene", "target", "clutter", "simulation", "preprocess",
             "doppler", "detector", "tracker", "sense"}


@dataclass(frozen=True)
class SimulationConfig:
    num_packets: int = 641
    seed: int = 0
    timing_offset_max: float | None = None  # s; None = 0.1 / bandwidth
    phase_offset_max: float = math.pi


@dataclass
class ProjectConfig:
    radio: RadioConfig | None = None
    scene: Scene | None = None
    simulation: SimulationConfig = SimulationConfig()
    sense: SenseConfig | None = None


def _check_keys(section: str, table: dict, allowed) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")


def _field_names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _build(cls, section: str, table: dict, **extra):
    _check_keys(section, table, _field_names(cls))
    try:
        return cls(**{**table, **extra})
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def _vec3(section: str, key: str, value) -> tuple[float, float, float]:
    if not (isinstance(value, list) and len(value) == 3):
        raise ConfigError(f"[{section}] {key} must be a list of three numbers")
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _radio(table: dict) -> RadioConfig:
    table = dict(table)
    preset = table.pop("preset", None)
    _check_keys("radio", table, _field_names(RadioConfig))
    if preset is not None:
        if preset not in _PRESETS:
            raise ConfigError(f"unknown radio preset {preset!r}; choose from {sorted(_PRESETS)}")
        base = _PRESETS[preset]()
        if "num_antennas" not in table and ("array_rows" in table or "array_cols" in table):
            table["num_antennas"] = table.get("array_rows", base.array_rows) * table.get("array_cols", base.array_cols)
        return replace(base, **table)
    return _build(RadioConfig, "radio", table)


def _scene(data: dict) -> Scene:
    table = dict(data.get("scene", {}))
    _check_keys("scene", table, {"tx_position", "snr_db", "noise_power", "sync_offsets", "direct_path_amplitude"})
    if "tx_position" not in table:
        raise ConfigError("[scene] tx_position is required")
    if "snr_db" in table and "noise_power" in table:
        raise ConfigError("[scene] give snr_db or noise_power, not both")
    tx = Position3.of(_vec3("scene", "tx_position", table["tx_position"]))

    targets = []
    for i, t in enumerate(data.get("target", [])):
        _check_keys(f"target.{i}", t, {"position", "velocity", "reflectivity"})
        targets.append(TargetSpec(
            Position3.of(_vec3("target", "position", t["position"])),
            _vec3("target", "velocity", t.get("velocity", [0.0, 0.0, 0.0])),
            float(t.get("reflectivity", 1.0)),
        ))

    clutter = []
    if "direct_path_amplitude" in table:
        clutter.append(Scene(tx).direct_path(float(table["direct_path_amplitude"])))
    for i, c in enumerate(data.get("clutter", [])):
        _check_keys(f"clutter.{i}", c, {"range", "delay", "amplitude", "azimuth_deg", "elevation_deg"})
        if ("range" in c) == ("delay" in c):
            raise ConfigError(f"[[clutter]] entry {i}: give exactly one of range or delay")
        delay = float(c["delay"]) if "delay" in c else float(c["range"]) / SPEED_OF_LIGHT
        clutter.append(ClutterPath(delay, float(c.get("amplitude", 1.0)),
                                   math.radians(c.get("azimuth_deg", 0.0)),
                                   math.radians(c.get("elevation_deg", 0.0))))

    scene = Scene(tx, tuple(targets), tuple(clutter),
                  noise_power=float(table.get("noise_power", 0.0)),
                  sync_offsets_enabled=bool(table.get("sync_offsets", True)))
    if "snr_db" in table:
        scene = scene.with_snr(float(table["snr_db"]))
    return scene


def _grid(table: dict) -> tuple[AoaGrid, int, str]:
    allowed = {"az_min_deg", "az_max_deg", "el_min_deg", "el_max_deg", "step_deg", "guard", "window"}
    _check_keys("doppler", table, allowed)
    grid = AoaGrid.from_degrees(table.get("az_min_deg", -60.0), table.get("az_max_deg", 60.0),
                                table.get("el_min_deg", -30.0), table.get("el_max_deg", 30.0),
                                table.get("step_deg", 2.0))
    return grid, int(table.get("guard", 2)), str(table.get("window", "rect"))


def parse_config(data: dict, need_scene: bool = False, need_sense: bool = False) -> ProjectConfig:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    out = ProjectConfig()
    if "radio" in data:
        out.radio = _radio(data["radio"])
    if "scene" in data:
        out.scene = _scene(data)
    elif "target" in data or "clutter" in data:
        raise ConfigError("[[target]] / [[clutter]] need a [scene] section")
    if "simulation" in data:
        out.simulation = _build(SimulationConfig, "simulation", data["simulation"])

    if need_scene and (out.scene is None or out.radio is None):
        raise ConfigError("scene configuration needs [radio] and [scene]")

    if need_sense or any(k in data for k in ("preprocess", "doppler", "detector", "tracker", "sense")):
        if out.radio is None or out.scene is None:
            raise ConfigError("sensing configuration needs [radio] and [scene] tx_position")
        grid, guard, window = _grid(data.get("doppler", {}))
        sense_table = data.get("sense", {})
        _check_keys("sense", sense_table, {"window_length", "hop", "localize_eps"})
        out.sense = SenseConfig(
            radio=out.radio,
            tx_position=out.scene.tx_position,
            preprocess=_build(PreprocConfig, "preprocess", data.get("preprocess", {})),
            grid=grid,
            guard=guard,
            slow_time_window=window,
            detector=_build(DetectorConfig, "detector", data.get("detector", {})),
            tracker=_build(TrackerConfig, "tracker", data.get("tracker", {})),
            **sense_table,
        )
        out.sense.validate()
    return out


def load_config(path, need_scene: bool = False, need_sense: bool = False) -> ProjectConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data, need_scene, need_sense)
