from __future__ import annotations
import argparse
import math
from pathlib import Path
from typing import Any

import numpy as np

from ..mbd.profile import gravity_vector
from ..scenario.bekker import bekker_fit, palm_area
from ..scenario.sinkage import RunRecord, Sample, pressure_sinkage_run
from ..utils.config import RunConfig
from ..utils.errors import AnalysisError, SinksimError, StabilityError
from ..utils.io import write_json, write_record_csv
from ..utils.printing import PRINTER as p
from .common import bed_for_run, chunk_runner, config_from_args


def _progress(s: Sample) -> None:
    p.progress(f"t={s.t:.2f}s sigma={s.sigma:.2f}N palm={s.palm_axial * 1e3:.2f}mm "
               f"KE={s.kinetic_energy:.3g}J contacts={s.body_contacts} clipping={s.clipping}")


def summarize(record: RunRecord, cfg: RunConfig) -> dict[str, Any]:
    out = record.summary()
    out["stiffness_scale"] = cfg.solver.stiffness_scale
    out["preset"] = cfg.preset
    try:
        out["bekker"] = bekker_fit(record, palm_area(cfg.gripper.palm_radius)).to_dict()
    except AnalysisError as e:
        out["bekker"] = {"error": str(e)}
    return out


def run(args: argparse.Namespace) -> int:
    try:
        cfg = config_from_args(args)
        csv_path = Path(args.out or Path(cfg.output.dir) / "run.csv")
        profile = cfg.profile()
        g = gravity_vector(cfg.gravity_magnitude, profile.theta)
        with chunk_runner(cfg) as runner:
            bed = bed_for_run(cfg, args.bed, runner)
            p.header(f"SINK θ={math.degrees(profile.theta):g}° t4={profile.t4:g}s "
                     f"|g|={cfg.gravity_magnitude:g}")
            record = pressure_sinkage_run(
                bed, cfg.gripper, profile, g, cfg.solver.dt_cpl,
                sample_rate=cfg.output.sample_rate,
                safety_fraction=cfg.solver.safety_fraction, runner=runner,
                metadata={"stiffness_scale": cfg.solver.stiffness_scale, "preset": cfg.preset},
                on_progress=_progress, mbd_substeps=cfg.solver.mbd_substeps,
            )
    except StabilityError as e:
        partial = e.partial_record
        if isinstance(partial, RunRecord):
            write_record_csv(csv_path, partial)
            write_json(csv_path.with_suffix(".json"), summarize(partial, cfg))
            p.warn(f"partial record ({len(partial)} samples) written to {csv_path}")
        p.footer_fail(str(e))
        return e.exit_code
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    write_record_csv(csv_path, record)
    summary = summarize(record, cfg)
    write_json(csv_path.with_suffix(".json"), summary)
    if record.clipping:
        p.warn(f"{record.clipping} contact(s) clipped by the overlap limit")
    if not len(record):
        p.info("load schedule is empty; no samples recorded")
    else:
        rows: dict[str, Any] = {
            "final sinkage (mm)": round(record.final_sinkage * 1e3, 2),
            "max |sigma| (N)": round(record.max_abs_sigma, 2),
        }
        fit = summary["bekker"]
        if "k" in fit:
            rows["Bekker k"] = fit["k"]
            rows["Bekker n"] = fit["n"]
            if fit["degenerate"]:
                p.warn("Bekker fit is degenerate (flat exponent or noisy residual)")
        wall = record.metadata.get("wall_clock_s")
        if wall is not None and np.isfinite(wall):
            rows["wall clock (s)"] = round(wall, 1)
        p.summary(rows)
    p.footer_ok(f"Record written to {csv_path}")
    return 0
