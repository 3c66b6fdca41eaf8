from __future__ import annotations
import argparse

from ..scenario.bekker import bekker_fit, palm_area
from ..utils.errors import SinksimError
from ..utils.io import read_record_csv
from ..utils.printing import PRINTER as p
from .common import config_from_args


def run(args: argparse.Namespace) -> int:
    """Bekker power law for each record; the palm disc of the configured gripper is the area."""
    try:
        area = args.area if args.area is not None else palm_area(
            config_from_args(args).gripper.palm_radius)
        fits = [(path, bekker_fit(read_record_csv(path), area)) for path in args.csv]
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    for path, fit in fits:
        p.info(f"{path}: k={fit.k:.6g} n={fit.n:.6g} residual={fit.residual:.6g} "
               f"({fit.points} points, area {fit.area:.6g} m^2)")
        if fit.degenerate:
            p.warn(f"{path}: fit is degenerate (flat exponent or noisy residual)")
    p.footer_ok()
    return 0
