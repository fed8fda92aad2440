"""Run configuration: JSON text in, validated :class:`RunConfig` out."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Optional, Union

from .binary import PRESETS, BinarySystem, Harmonic, preset

COMMANDS = ("regimes", "lifetime", "classical-sim", "quantum-sim", "capture", "presets")
FORMATS = ("csv", "json")
DEFAULT_SEED = 20240521
SEED_LIMIT = 2**64

_SYSTEM_KEYS = {
    "name": str,
    "central_mass": float,
    "planet_mass": float,
    "orbit_radius": float,
    "orbit_velocity": float,
    "period": float,
    "kick_amplitude": float,
    "kick_harmonics": list,
    "empirical_chaos_border": float,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class GridSpec:
    mu_min: float = 1e-22
    mu_max: float = 1e-13
    count: int = 200


@dataclass(frozen=True)
class RunConfig:
    command: str
    system: Union[str, dict] = "sun-jupiter"
    kick_amplitude: Optional[float] = None
    kick_harmonics: Optional[list] = None
    mass_ratio: Optional[float] = None
    initial_w: float = -1.0
    grid: GridSpec = field(default_factory=GridSpec)
    t_h: float = 1e7
    t_universe: Optional[float] = None
    # classical ensemble
    n_traj: int = 1000
    max_kicks: int = 10000
    record_kicks: Optional[int] = None
    w_min: float = 1e-4
    diffusion_window: Optional[list] = None
    chunk_size: int = 256
    # quantum lattice run (raw desk-scale parameters)
    k: Optional[float] = None
    omega: Optional[float] = None
    n_ionization: Optional[float] = None
    chaos_parameter: float = 100.0
    n_periods: Optional[int] = None
    window: Optional[list] = None
    fit_range: Optional[list] = None
    lattice_pad: int = 8
    realizations: int = 1
    # execution and output
    seed: int = DEFAULT_SEED
    threads: int = 1
    format: str = "csv"
    out: Optional[str] = None
    checkpoint: Optional[str] = None
    checkpoint_every: Optional[int] = None
    resume: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def binary_system(self) -> BinarySystem:
        if isinstance(self.system, str):
            system = preset(self.system)
        else:
            spec = dict(self.system)
            if "kick_harmonics" in spec:
                spec["kick_harmonics"] = _harmonics(spec["kick_harmonics"], "system.kick_harmonics")
            try:
                system = BinarySystem(**spec)
            except (TypeError, ValueError) as exc:
                raise ConfigError("system", str(exc)) from None
        overrides: dict[str, Any] = {}
        if self.kick_amplitude is not None:
            overrides["kick_amplitude"] = self.kick_amplitude
        if self.kick_harmonics is not None:
            overrides["kick_harmonics"] = _harmonics(self.kick_harmonics, "kick_harmonics")
        if overrides:
            try:
                system = replace(system, **overrides)
            except ValueError as exc:
                raise ConfigError(next(iter(overrides)), str(exc)) from None
        return system


def _harmonics(rows, key: str) -> tuple[Harmonic, ...]:
    out = []
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) not in (2, 3):
            raise ConfigError(key, "expected a list of [index, amplitude] or [index, amplitude, phase]")
        index = row[0]
        if isinstance(index, bool) or not isinstance(index, int) or index < 1:
            raise ConfigError(key, "harmonic index must be a positive integer")
        values = [_number(key, x) for x in row[1:]]
        out.append(Harmonic(index, *values))
    if not out:
        raise ConfigError(key, "at least one harmonic is required")
    return tuple(out)


def _number(key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _integer(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _pair(key: str, value) -> list:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(key, f"expected a two-element list, got {value!r}")
    return [_number(key, v) for v in value]


_FLOATS = {"kick_amplitude", "mass_ratio", "initial_w", "t_h", "t_universe", "w_min", "k", "omega",
           "n_ionization", "chaos_parameter"}
_INTS = {"n_traj", "max_kicks", "record_kicks", "chunk_size", "n_periods", "lattice_pad",
         "realizations", "seed", "threads", "checkpoint_every"}
_PAIRS = {"diffusion_window", "window", "fit_range"}
_STRINGS = {"out", "checkpoint"}
_KNOWN = {f.name for f in fields(RunConfig)}


def _validate_system(value) -> Union[str, dict]:
    if isinstance(value, str):
        if value not in PRESETS:
            raise ConfigError("system", f"unknown preset {value!r}; expected one of {sorted(PRESETS)}")
        return value
    if isinstance(value, dict):
        for key, item in value.items():
            if key not in _SYSTEM_KEYS:
                raise ConfigError(f"system.{key}", f"unknown key; expected one of {sorted(_SYSTEM_KEYS)}")
            kind = _SYSTEM_KEYS[key]
            if kind is float and item is not None:
                _number(f"system.{key}", item)
            elif kind is str and not isinstance(item, str):
                raise ConfigError(f"system.{key}", "expected a string")
            elif kind is list and not isinstance(item, list):
                raise ConfigError(f"system.{key}", "expected a list")
        for required in ("name", "central_mass", "planet_mass"):
            if required not in value:
                raise ConfigError(f"system.{required}", "required for an inline system")
        return dict(value)
    raise ConfigError("system", "expected a preset name or an inline system object")


def _validate_grid(value) -> GridSpec:
    if not isinstance(value, dict):
        raise ConfigError("grid", "expected an object with mu_min, mu_max, count")
    for key in value:
        if key not in ("mu_min", "mu_max", "count"):
            raise ConfigError(f"grid.{key}", "unknown key; expected mu_min, mu_max or count")
    base = GridSpec()
    grid = GridSpec(
        mu_min=_number("grid.mu_min", value.get("mu_min", base.mu_min)),
        mu_max=_number("grid.mu_max", value.get("mu_max", base.mu_max)),
        count=_integer("grid.count", value.get("count", base.count)),
    )
    if not 0 < grid.mu_min < grid.mu_max:
        raise ConfigError("grid", "need 0 < mu_min < mu_max")
    if grid.count < 2:
        raise ConfigError("grid.count", "a log-spaced grid needs at least 2 points")
    return grid


def from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    for key in data:
        if key not in _KNOWN:
            raise ConfigError(key, "unknown key")
    if "command" not in data:
        raise ConfigError("command", f"required; one of {list(COMMANDS)}")
    clean: dict[str, Any] = {}
    for key, value in data.items():
        if key == "command":
            if value not in COMMANDS:
                raise ConfigError(key, f"expected one of {list(COMMANDS)}, got {value!r}")
        elif key == "system":
            value = _validate_system(value)
        elif key == "grid":
            value = _validate_grid(value)
        elif key == "format":
            if value not in FORMATS:
                raise ConfigError(key, f"expected one of {list(FORMATS)}, got {value!r}")
        elif key == "kick_harmonics":
            if value is not None:
                _harmonics(value, key)
        elif key == "resume":
            if not isinstance(value, bool):
                raise ConfigError(key, f"expected true or false, got {value!r}")
        elif value is None:
            pass
        elif key in _FLOATS:
            value = _number(key, value)
        elif key in _INTS:
            value = _integer(key, value)
        elif key in _PAIRS:
            value = _pair(key, value)
        elif key in _STRINGS:
            if not isinstance(value, str):
                raise ConfigError(key, f"expected a string, got {value!r}")
        clean[key] = value
    cfg = RunConfig(**clean)
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: RunConfig) -> None:
    if not 0 <= cfg.seed < SEED_LIMIT:
        raise ConfigError("seed", "expected an unsigned 64-bit integer")
    if cfg.initial_w > 0:
        raise ConfigError("initial_w", "must be <= 0")
    if cfg.mass_ratio is not None and not cfg.mass_ratio > 0:
        raise ConfigError("mass_ratio", "must be positive")
    for key in ("n_traj", "max_kicks", "chunk_size", "threads", "realizations"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be >= 1")
    if cfg.lattice_pad < 4:
        raise ConfigError("lattice_pad", "must be >= 4")
    for key in ("t_h", "w_min", "chaos_parameter"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, "must be positive")
    if cfg.t_universe is not None and not cfg.t_universe > 0:
        raise ConfigError("t_universe", "must be positive")
    if cfg.checkpoint_every is not None and cfg.checkpoint_every < 1:
        raise ConfigError("checkpoint_every", "must be >= 1")
    if cfg.k is not None and (cfg.k < 0 or not math.isfinite(cfg.k)):
        raise ConfigError("k", "must be a finite non-negative number")


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"not valid JSON ({exc})") from None
    return from_mapping(data)


def apply_overrides(data: dict, assignments: list[str]) -> dict:
    """Apply ``key=value`` strings; values parse as JSON, falling back to plain strings.

    Dotted keys address nested objects (``grid.count=50``).
    """
    out = json.loads(json.dumps(data))
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(item, "override must look like key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, f"{part!r} is not an object")
            target = node
        target[parts[-1]] = value
    return out
