from __future__ import annotations
import argparse
from pathlib import Path
from typing import Any

from ..scenario.sweep import SweepResult, build_jobs, slope_ratios, slope_sweep
from ..utils.errors import SinksimError
from ..utils.io import write_json, write_record_csv
from ..utils.printing import PRINTER as p
from .common import config_from_args, float_list, out_dir
from .sink import summarize


def run(args: argparse.Namespace) -> int:
    try:
        cfg = config_from_args(args)
        slopes = float_list(args.slopes, "--slopes") or list(cfg.sweep.slopes)
        durations = float_list(args.durations, "--durations") or list(cfg.sweep.durations)
        target = out_dir(args, cfg)
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    jobs = build_jobs(
        cfg.sandbox, cfg.scaled_materials(), cfg.gripper, cfg.profile(), slopes, durations,
        gravity=cfg.gravity_magnitude, seed=cfg.seed, dt_cpl=cfg.solver.dt_cpl,
        sample_rate=cfg.output.sample_rate, safety_fraction=cfg.solver.safety_fraction,
        metadata={"stiffness_scale": cfg.solver.stiffness_scale, "preset": cfg.preset},
    )
    repose = args.repose_deg
    if repose is None:
        repose = cfg.materials[cfg.materials.index(cfg.sandbox.material)].repose_target_deg
    p.header(f"SWEEP {len(jobs)} runs, {cfg.solver.threads} worker(s)")

    entries: list[dict[str, Any]] = []

    def done(res: SweepResult) -> None:
        run_dir = Path(target) / res.job.name
        entry: dict[str, Any] = {
            "dir": res.job.name,
            "theta_deg": res.job.theta_deg,
            "t4_s": res.job.t4,
            "seed": res.job.seed,
            "status": "ok" if res.ok else res.error,
            "exit_code": res.exit_code,
        }
        if res.record is not None:
            write_record_csv(run_dir / "run.csv", res.record)
            write_json(run_dir / "run.json", summarize(res.record, cfg))
            entry["final_sinkage_m"] = res.record.final_sinkage
        entries.append(entry)
        if res.ok:
            p.success(f"{res.job.name}: final sinkage "
                      f"{entry['final_sinkage_m'] * 1e3:.2f} mm")
        else:
            p.error(f"{res.job.name}: {res.error}")

    results = slope_sweep(jobs, workers=cfg.solver.threads, repose_deg=repose, on_done=done)
    write_json(target / "manifest.json", {
        "runs": entries,
        "slope_ratios": slope_ratios(results),
        "config": cfg.to_dict(),
    })

    failed = [r for r in results if not r.ok]
    if failed:
        p.footer_fail(f"{len(failed)} of {len(results)} runs failed; see {target / 'manifest.json'}")
        return max(r.exit_code for r in failed)
    p.footer_ok(f"Sweep written to {target}")
    return 0
