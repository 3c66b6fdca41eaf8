from __future__ import annotations
import csv
import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..granular.grid import SpatialGrid
from ..granular.integrator import DemState
from ..granular.materials import Interaction, MaterialParams, MaterialTable
from ..granular.particles import ParticleSet
from ..granular.surfaces import BoxBoundary
from ..scenario.sandbox import SandboxSpec, SettledBed, bed_domain
from ..scenario.sinkage import CSV_COLUMNS, RunRecord, Sample
from .errors import ConfigError, InputFileError

BED_HEADER = "sinksim-bed v1"
BED_COLUMNS = ("x", "y", "z", "vx", "vy", "vz", "wx", "wy", "wz", "radius", "material_id")
TRUNCATION_MARKER = "# truncated at t="

PathLike = Union[str, Path]


def _read_text(p: Path) -> str:
    try:
        return p.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise InputFileError(f"Could not find {p}") from e
    except OSError as e:
        raise InputFileError(f"Failed reading {p}: {e}") from e


def write_json(path: PathLike, data: Any) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n",
                 encoding="utf-8")
    return p


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def read_json(path: PathLike) -> dict[str, Any]:
    p = Path(path)
    text = _read_text(p)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Failed to parse {p}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Unexpected structure in {p}: expected JSON object at top level")
    return data


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def save_bed(path: PathLike, bed: SettledBed) -> Path:
    """Whitespace table, one particle per row, plus `<path>.json` with the bed metadata."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    ps = bed.particles
    table = np.column_stack([
        ps.positions, ps.velocities, ps.angular_velocities, ps.radii,
        ps.material_ids.astype(np.float64),
    ]) if len(ps) else np.zeros((0, len(BED_COLUMNS)))
    np.savetxt(p, table, fmt="%.17g", header=f"{BED_HEADER}\n{' '.join(BED_COLUMNS)}")
    write_json(_sidecar(p), bed.metadata())
    return p


def _material_table(meta: dict[str, Any], where: Path) -> MaterialTable:
    try:
        mats = [MaterialParams(**m) for m in meta["materials"]]
        inters = [Interaction(**i) for i in meta.get("interactions", [])]
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Bad material table in {where}: {e}") from e
    return MaterialTable(mats, inters)


def load_bed(path: PathLike) -> SettledBed:
    """Read a bed written by `save_bed`. Contact history is not stored; it restarts empty."""
    p = Path(path)
    text = _read_text(p)
    if not text.startswith(f"# {BED_HEADER}"):
        raise ConfigError(f"{p} is not a {BED_HEADER} file")
    side = _sidecar(p)
    meta = read_json(side)
    materials = _material_table(meta, side)
    try:
        spec_doc = dict(meta["sandbox"])
        spec_doc["box"] = tuple(spec_doc["box"])
        spec = SandboxSpec(**spec_doc)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Bad sandbox block in {side}: {e}") from e

    try:
        table = np.loadtxt(p, comments="#", ndmin=2)
    except ValueError as e:
        raise ConfigError(f"Failed to parse {p}: {e}") from e
    if table.size == 0:
        table = np.zeros((0, len(BED_COLUMNS)))
    if table.shape[1] != len(BED_COLUMNS):
        raise ConfigError(f"{p}: expected {len(BED_COLUMNS)} columns, got {table.shape[1]}")
    try:
        particles = ParticleSet.create(
            table[:, 0:3], table[:, 9], table[:, 10].astype(np.int64), materials,
            velocities=table[:, 3:6], angular_velocities=table[:, 6:9],
        )
    except ValueError as e:
        raise ConfigError(f"{p}: {e}") from e
    top = float(table[:, 2].max()) if len(table) else 0.0
    lower, upper = bed_domain(spec, top)
    state = DemState(particles, SpatialGrid.for_particles(particles, lower, upper))
    wall = materials.index(spec.wall_material)
    return SettledBed(
        state=state,
        box=BoxBoundary(spec.box, wall),
        materials=materials,
        spec=spec,
        seed=int(meta.get("seed", 0)),
        dt_dem=float(meta.get("dt_dem_s", math.nan)),
        actual_depth=float(meta.get("actual_depth_m", math.nan)),
        settle_time=float(meta.get("settle_time_s", 0.0)),
        settle_steps=int(meta.get("settle_steps", 0)),
    )


def write_record_csv(path: PathLike, record: RunRecord) -> Path:
    """Samples in CSV_COLUMNS order, header row first.

    The sinkage zero and the clipping total live in the summary JSON next to
    the CSV; a truncated run ends with a `# truncated at t=...` line.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for s in record.samples:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in s])
        if record.truncated is not None:
            last = record.samples[-1].t if record.samples else 0.0
            f.write(f"{TRUNCATION_MARKER}{last:.6g}: {record.truncated}\n")
    return p


def _restore_reference(record: RunRecord) -> None:
    """Recover the sinkage zero from the samples when no summary JSON is around.

    Samples before the reference carry sinkage 0; after it, sinkage plus palm
    position is the reference position.
    """
    moved = next((i for i, s in enumerate(record.samples) if s.sinkage != 0.0), None)
    if moved is None:
        return
    first = record.samples[moved]
    ref_x = first.sinkage + first.palm_axial
    ref_t = first.t
    if moved > 0 and abs(ref_x - record.samples[moved - 1].palm_axial) <= 1e-12:
        ref_t = record.samples[moved - 1].t
    record.reference_time = ref_t
    record.reference_axial = ref_x


def read_record_csv(path: PathLike) -> RunRecord:
    """Inverse of `write_record_csv`.

    The reference and clipping total come from the `<stem>.json` summary when
    present; otherwise the reference is recovered from the sinkage column.
    """
    p = Path(path)
    text = _read_text(p)
    truncated = None
    body = []
    for line in text.splitlines():
        if line.startswith(TRUNCATION_MARKER):
            truncated = line.split(": ", 1)[1] if ": " in line else line
        elif line.strip() and not line.startswith("#"):
            body.append(line)
    reader = csv.DictReader(body)
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ConfigError(f"{p}: missing columns {', '.join(missing)}")
    record = RunRecord(truncated=truncated)
    try:
        for row in reader:
            record.samples.append(Sample(
                t=float(row["t_s"]),
                sigma=float(row["sigma_N"]),
                load_x=float(row["load_x_N"]),
                load_y=float(row["load_y_N"]),
                load_z=float(row["load_z_N"]),
                palm_axial=float(row["palm_axial_m"]),
                sinkage=float(row["sinkage_m"]),
                kinetic_energy=float(row["kinetic_energy_J"]),
                body_contacts=int(row["body_contacts"]),
                clipping=int(row["clipping_warnings"]),
            ))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Failed to parse {p}: {e}") from e

    summary_path = p.with_suffix(".json")
    if not summary_path.exists():
        _restore_reference(record)
        # lower bound; only sampled steps are in the file
        record.clipping = sum(s.clipping for s in record.samples)
        return record
    summary = read_json(summary_path)
    try:
        ref_t, ref_x = summary.get("reference_time_s"), summary.get("reference_axial_m")
        if ref_t is not None and ref_x is not None:
            record.reference_time = float(ref_t)
            record.reference_axial = float(ref_x)
        record.clipping = int(summary.get("clipping_warnings", 0))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Failed to parse {summary_path}: {e}") from e
    return record


def write_profile_csv(path: PathLike, radius: Any, height: Any) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["r_m", "h_m"])
        for r, h in zip(np.asarray(radius).tolist(), np.asarray(height).tolist()):
            w.writerow([repr(r), repr(h)])
    return p


def write_height_map(path: PathLike, heights: Any, resolution: float,
                     origin: tuple[float, float] = (0.0, 0.0)) -> Path:
    """Grid of surface heights, rows along x; empty cells are `nan`."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(p, np.asarray(heights, dtype=np.float64), fmt="%.9g",
               header=f"cell_m={resolution!r} origin_x_m={origin[0]!r} origin_y_m={origin[1]!r}")
    return p
