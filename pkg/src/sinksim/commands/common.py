"""Flag handling shared by the sub-commands."""
from __future__ import annotations
import argparse
from pathlib import Path
from typing import Any, Optional

from ..granular.parallel import ChunkRunner
from ..scenario.sandbox import SettledBed, fill_and_settle
from ..utils.config import PRESETS, RunConfig, load_config
from ..utils.errors import ConfigError
from ..utils.io import load_bed
from ..utils.printing import PRINTER as p


def split_csv(s: Optional[str]) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()] if s else []


def float_list(s: Optional[str], flag: str) -> list[float]:
    try:
        return [float(x) for x in split_csv(s)]
    except ValueError as e:
        raise ConfigError(f"expected comma-separated numbers, got '{s}'", path=flag) from e


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML/JSON run configuration")
    parser.add_argument("--preset", choices=PRESETS, help="Default set (desk or full)")
    parser.add_argument("--seed", type=int, help="Random seed for bed generation")
    parser.add_argument("--gravity", help="earth, moon or a magnitude in m/s^2")
    parser.add_argument("--threads", type=int, help="Contact worker threads / sweep processes")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Flags > SINKSIM_* environment > config document > preset."""
    overrides: dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "gravity", None) is not None:
        overrides["gravity"] = args.gravity
    if getattr(args, "threads", None) is not None:
        overrides.setdefault("solver", {})["threads"] = args.threads
    if getattr(args, "slope", None) is not None:
        overrides.setdefault("load", {})["theta_deg"] = args.slope
    if getattr(args, "t4", None) is not None:
        overrides.setdefault("load", {})["t4"] = args.t4
    return load_config(getattr(args, "config", None), preset=getattr(args, "preset", None),
                       overrides=overrides)


def chunk_runner(cfg: RunConfig) -> ChunkRunner:
    return ChunkRunner(cfg.solver.threads)


def settle_progress(elapsed: float, mean_ke: float) -> None:
    p.progress(f"settling t={elapsed:.2f}s KE/particle={mean_ke:.3g} J")


def fresh_bed(cfg: RunConfig, runner: ChunkRunner) -> SettledBed:
    p.progress(f"filling {cfg.sandbox.box} box to {cfg.sandbox.fill_depth:g} m "
               f"with {cfg.sandbox.target_count()} particles (seed {cfg.seed})")
    return fill_and_settle(
        cfg.sandbox, cfg.scaled_materials(), cfg.seed, gravity=cfg.gravity_magnitude,
        safety_fraction=cfg.solver.safety_fraction, runner=runner, on_progress=settle_progress,
    )


def bed_for_run(cfg: RunConfig, bed_path: Optional[str], runner: ChunkRunner) -> SettledBed:
    """Snapshot from disk when given, else a newly settled bed."""
    if not bed_path:
        return fresh_bed(cfg, runner)
    bed = load_bed(bed_path)
    if bed.materials.materials != cfg.scaled_materials().materials:
        raise ConfigError(f"{bed_path} was settled with a different material table "
                          f"(check materials and solver.stiffness_scale)", path="bed")
    p.progress(f"loaded {len(bed.particles)} particles from {bed_path}")
    return bed


def out_dir(args: argparse.Namespace, cfg: RunConfig) -> Path:
    d = Path(getattr(args, "out", None) or cfg.output.dir)
    d.mkdir(parents=True, exist_ok=True)
    return d
