"""Run configuration: presets, YAML/JSON documents, environment and flag overrides.

Precedence is flags > environment > document > preset. Every key of the
document must be known; errors name the offending field by dotted path.
"""
from __future__ import annotations
import copy
import json
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import yaml

from ..granular.materials import PRESET_MATERIALS, Interaction, MaterialParams, MaterialTable
from ..mbd.gripper import GripperGeometry
from ..mbd.profile import EARTH_GRAVITY, MOON_GRAVITY, HoldSchedule, LoadProfile
from ..scenario.repose import ReposeSpec
from ..scenario.sandbox import SandboxSpec
from .errors import ConfigError, InputFileError, InvalidMaterialError

SCHEMA_VERSION = 1
PRESETS = ("desk", "full")
NAMED_GRAVITY = {"earth": EARTH_GRAVITY, "moon": MOON_GRAVITY}
DESK_GRIPPER_SCALE = 0.4


@dataclass(frozen=True)
class LoadSettings:
    theta_deg: float = 0.0
    t1: float = 0.0
    t2: float = 0.5
    t3: float = 0.5
    t4: float = 10.0
    preload: float = 5.0
    final: float = 61.0
    # None: gripper mass times |g|
    mg: Optional[float] = None
    scale_with_gravity: bool = True
    holds: Optional[HoldSchedule] = None


@dataclass(frozen=True)
class SolverSettings:
    dt_cpl: float = 1e-4
    safety_fraction: float = 0.2
    stiffness_scale: float = 1.0
    threads: int = 1
    mbd_substeps: int = 10
    rolling_damping: float = 0.3


@dataclass(frozen=True)
class SweepSettings:
    slopes: tuple[float, ...] = (0.0, 15.0, 25.0, 35.0)
    durations: tuple[float, ...] = (10.0, 60.0)


@dataclass(frozen=True)
class OutputSettings:
    sample_rate: float = 100.0
    dir: str = "runs"


@dataclass
class RunConfig:
    preset: str
    materials: MaterialTable
    sandbox: SandboxSpec
    gripper: GripperGeometry
    load: LoadSettings
    gravity: Union[str, float]
    solver: SolverSettings
    repose: ReposeSpec
    sweep: SweepSettings
    seed: int
    output: OutputSettings
    schema_version: int = SCHEMA_VERSION

    @property
    def gravity_magnitude(self) -> float:
        if isinstance(self.gravity, str):
            return NAMED_GRAVITY[self.gravity]
        return float(self.gravity)

    def scaled_materials(self) -> MaterialTable:
        return self.materials.scaled(self.solver.stiffness_scale)

    def profile(self, theta_deg: Optional[float] = None, t4: Optional[float] = None) -> LoadProfile:
        ld = self.load
        g = self.gravity_magnitude
        factor = g / EARTH_GRAVITY if ld.scale_with_gravity else 1.0
        mg = ld.mg if ld.mg is not None else self.gripper.total_mass * g
        return LoadProfile(
            theta=math.radians(ld.theta_deg if theta_deg is None else theta_deg),
            t1=ld.t1, t2=ld.t2, t3=ld.t3, t4=ld.t4 if t4 is None else t4,
            mg=mg, preload=ld.preload * factor, delta_final=ld.final * factor,
            holds=ld.holds,
        )

    def to_dict(self) -> dict[str, Any]:
        load = asdict(self.load)
        return {
            "schema_version": self.schema_version,
            "preset": self.preset,
            "materials": [m.to_dict() for m in self.materials.materials],
            "interactions": [i.to_dict() for i in self.materials.interactions],
            "sandbox": self.sandbox.to_dict(),
            "gripper": self.gripper.to_dict(),
            "load": load,
            "gravity": self.gravity,
            "solver": asdict(self.solver),
            "repose": self.repose.to_dict(),
            "sweep": {"slopes": list(self.sweep.slopes),
                      "durations": list(self.sweep.durations)},
            "seed": self.seed,
            "output": asdict(self.output),
        }


def preset_dict(name: str) -> dict[str, Any]:
    """Full plain-dict configuration for a preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (expected one of {', '.join(PRESETS)})",
                          path="preset")
    materials = [m.to_dict() for m in PRESET_MATERIALS.values()]
    if name == "full":
        sandbox = SandboxSpec().to_dict()
        gripper = GripperGeometry().to_dict()
        stiffness = 1.0
        repose = ReposeSpec(particle_diameter=0.001, cylinder_radius=0.02,
                            cylinder_height=0.06, fill_height=0.04, plate_size=0.15).to_dict()
    else:
        sandbox = SandboxSpec(box=(0.15, 0.15, 0.10), fill_depth=0.06,
                              particle_diameter=0.004).to_dict()
        gripper = GripperGeometry().scaled(DESK_GRIPPER_SCALE).to_dict()
        stiffness = 0.1
        repose = ReposeSpec().to_dict()
    return {
        "schema_version": SCHEMA_VERSION,
        "preset": name,
        "materials": materials,
        "interactions": [],
        "sandbox": sandbox,
        "gripper": gripper,
        "load": asdict(LoadSettings()),
        "gravity": "earth",
        "solver": asdict(replace(SolverSettings(), stiffness_scale=stiffness)),
        "repose": repose,
        "sweep": {"slopes": list(SweepSettings().slopes),
                  "durations": list(SweepSettings().durations)},
        "seed": 1,
        "output": asdict(OutputSettings()),
    }


def load_document(path: Union[str, Path]) -> dict[str, Any]:
    """Parse a YAML (or .json) configuration document."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise InputFileError(f"Could not find {p}") from e
    except OSError as e:
        raise InputFileError(f"Failed reading {p}: {e}") from e
    try:
        if p.suffix.lower() == ".json":
            loaded: Any = json.loads(text)
        else:
            loaded = yaml.safe_load(text) or {}
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to parse {p}: {e}") from e
    if not isinstance(loaded, dict):
        raise ConfigError(f"expected a mapping at the top level of {p}")
    return loaded


_TOP_KEYS = {
    "schema_version", "preset", "materials", "interactions", "sandbox", "gripper", "load",
    "gravity", "solver", "repose", "sweep", "seed", "output",
}


def _check_keys(data: Any, allowed: set[str], path: str) -> dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", path=path)
    unknown = sorted(set(data) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError("unknown key", path=where)
    return data


def _merge(base: dict[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _section(cls: Any, data: Any, path: str) -> Any:
    """Build a flat frozen dataclass from a mapping, naming the field on failure."""
    names = {f.name for f in fields(cls)}
    data = _check_keys(data, names, path)
    kwargs: dict[str, Any] = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(value)
        kwargs[f.name] = value
    try:
        obj = cls(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e), path=path) from e
    validate = getattr(obj, "validate", None)
    if validate is not None:
        try:
            validate(path)
        except TypeError as e:
            # e.g. a string where a number belongs
            raise ConfigError(f"wrong value type: {e}", path=path) from e
    return obj


def _material_entries(entries: Any) -> list[MaterialParams]:
    """Document materials, each completed from the preset of the same name."""
    if not isinstance(entries, list):
        raise ConfigError("expected a list", path="materials")
    names = {f.name for f in fields(MaterialParams)}
    mats: list[MaterialParams] = []
    for k, entry in enumerate(entries):
        where = f"materials[{k}]"
        entry = _check_keys(entry, names, where)
        if "name" not in entry:
            raise ConfigError("missing key", path=f"{where}.name")
        base = PRESET_MATERIALS.get(entry["name"])
        merged = {**(base.to_dict() if base else {}), **entry}
        try:
            mats.append(MaterialParams(**merged))
        except InvalidMaterialError as e:
            raise InvalidMaterialError(e.detail, path=f"{where}.{e.path}") from e
        except TypeError as e:
            raise ConfigError(f"invalid material entry: {e}", path=where) from e
    return mats


def _interactions(entries: Any) -> list[Interaction]:
    if not isinstance(entries, list):
        raise ConfigError("expected a list", path="interactions")
    names = {f.name for f in fields(Interaction)}
    out: list[Interaction] = []
    for k, entry in enumerate(entries):
        where = f"interactions[{k}]"
        entry = _check_keys(entry, names, where)
        try:
            out.append(Interaction(**entry))
        except TypeError as e:
            raise ConfigError(str(e), path=where) from e
        for fld in ("static_friction", "rolling_friction", "restitution"):
            v = entry.get(fld)
            if v is None:
                continue
            ok = 0 < v <= 1 if fld == "restitution" else v >= 0
            if not ok:
                raise ConfigError("out of range", path=f"{where}.{fld}")
    return out


def _material_table(overrides: list[MaterialParams], interactions: Any) -> MaterialTable:
    """Preset materials updated by name; new names are appended in document order."""
    mats = dict(PRESET_MATERIALS)
    for m in overrides:
        mats[m.name] = m
    return MaterialTable(list(mats.values()), _interactions(interactions))


def _gravity(value: Any) -> Union[str, float]:
    if isinstance(value, str):
        key = value.strip().lower()
        if key in NAMED_GRAVITY:
            return key
        try:
            value = float(key)
        except ValueError as e:
            raise ConfigError(f"expected earth, moon or a number, got '{value}'",
                              path="gravity") from e
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError("must be earth, moon or a positive number", path="gravity")
    return float(value)


def _load_settings(data: Any) -> LoadSettings:
    data = _check_keys(data, {f.name for f in fields(LoadSettings)}, "load")
    data = dict(data)
    holds = data.pop("holds", None)
    schedule = None
    if holds is not None:
        schedule = _section(HoldSchedule, holds, "load.holds")
        for name in ("increment", "ramp", "hold"):
            if not getattr(schedule, name) > 0:
                raise ConfigError("must be > 0", path=f"load.holds.{name}")
    ld = _section(LoadSettings, data, "load")
    ld = replace(ld, holds=schedule)
    # raises on bad timing or magnitudes
    LoadProfile(t1=ld.t1, t2=ld.t2, t3=ld.t3, t4=ld.t4, mg=ld.mg or 0.0,
                preload=ld.preload, delta_final=ld.final, holds=ld.holds)
    return ld


def parse_config(doc: Mapping[str, Any], preset: Optional[str] = None) -> RunConfig:
    """Validate `doc` layered over the preset (`preset` argument wins over `doc['preset']`)."""
    doc = _check_keys(dict(doc), _TOP_KEYS, "")
    if "schema_version" not in doc:
        raise ConfigError("missing key", path="schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {doc['schema_version']!r}, expected "
                          f"{SCHEMA_VERSION}", path="schema_version")
    name = preset or doc.get("preset") or "desk"
    base = preset_dict(name)
    body = {k: v for k, v in doc.items() if k != "materials"}
    merged = _merge(base, body)
    merged["preset"] = name
    materials = _material_table(_material_entries(doc.get("materials", [])),
                                merged["interactions"])

    seed = merged["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("must be a non-negative integer", path="seed")
    solver = _section(SolverSettings, merged["solver"], "solver")
    for fld in ("dt_cpl", "safety_fraction", "stiffness_scale"):
        if not getattr(solver, fld) > 0:
            raise ConfigError("must be > 0", path=f"solver.{fld}")
    if solver.safety_fraction > 1:
        raise ConfigError("must be <= 1", path="solver.safety_fraction")
    if solver.threads < 1 or solver.mbd_substeps < 1:
        raise ConfigError("threads and mbd_substeps must be >= 1", path="solver")
    output = _section(OutputSettings, merged["output"], "output")
    if not output.sample_rate > 0:
        raise ConfigError("must be > 0", path="output.sample_rate")
    sweep = _section(SweepSettings, merged["sweep"], "sweep")
    if any(d <= 0 for d in sweep.durations):
        raise ConfigError("durations must be > 0", path="sweep.durations")

    sandbox = _section(SandboxSpec, merged["sandbox"], "sandbox")
    repose = _section(ReposeSpec, merged["repose"], "repose")
    for where, material in (("sandbox.material", sandbox.material),
                            ("sandbox.wall_material", sandbox.wall_material),
                            ("repose.material", repose.material),
                            ("repose.wall_material", repose.wall_material)):
        if material not in materials.names():
            raise InvalidMaterialError(f"unknown material '{material}'", path=where)

    return RunConfig(
        preset=name,
        materials=materials,
        sandbox=sandbox,
        gripper=_section(GripperGeometry, merged["gripper"], "gripper"),
        load=_load_settings(merged["load"]),
        gravity=_gravity(merged["gravity"]),
        solver=solver,
        repose=repose,
        sweep=sweep,
        seed=seed,
        output=output,
    )


def load_config(
    path: Optional[Union[str, Path]] = None,
    preset: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Resolve the run configuration.

    `preset` and `overrides` come from command-line flags; `overrides` is a
    partial document merged last (e.g. {"load": {"theta_deg": 15}}).
    """
    env = os.environ if env is None else env
    doc: dict[str, Any] = load_document(path) if path else {"schema_version": SCHEMA_VERSION}
    chosen = preset or env.get("SINKSIM_PRESET") or doc.get("preset")
    env_layer: dict[str, Any] = {}
    if env.get("SINKSIM_THREADS"):
        try:
            env_layer = {"solver": {"threads": int(env["SINKSIM_THREADS"])}}
        except ValueError as e:
            raise ConfigError("SINKSIM_THREADS must be an integer", path="solver.threads") from e
    doc = _merge(doc, env_layer)
    if overrides:
        doc = _merge(doc, overrides)
    return parse_config(doc, preset=chosen)
