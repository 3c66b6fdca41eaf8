from __future__ import annotations
import argparse
from pathlib import Path

from ..utils.errors import SinksimError
from ..utils.io import save_bed
from ..utils.printing import PRINTER as p
from .common import chunk_runner, config_from_args, fresh_bed


def run(args: argparse.Namespace) -> int:
    try:
        cfg = config_from_args(args)
        with chunk_runner(cfg) as runner:
            bed = fresh_bed(cfg, runner)
        target = Path(args.out or Path(cfg.output.dir) / "bed.txt")
        save_bed(target, bed)
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    p.summary({
        "particles": len(bed.particles),
        "surface (mm)": round(bed.actual_depth * 1e3, 2),
        "settle time (s)": bed.settle_time,
        "settle steps": bed.settle_steps,
        "dt_dem (s)": bed.dt_dem,
    })
    p.footer_ok(f"Bed written to {target}")
    return 0
