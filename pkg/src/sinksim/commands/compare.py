from __future__ import annotations
import argparse

from ..scenario.lunar import LUNAR_SCALE, curve_difference
from ..utils.errors import SinksimError
from ..utils.io import read_record_csv, write_json
from ..utils.printing import PRINTER as p


def run(args: argparse.Namespace) -> int:
    """Difference statistics of a candidate curve against a reference curve."""
    scale = LUNAR_SCALE if args.lunar else args.force_scale
    try:
        reference = read_record_csv(args.reference)
        candidate = read_record_csv(args.candidate)
        report = curve_difference(reference.curve(), candidate.curve(), force_scale=scale)
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    p.info(report.table())
    p.info(f"shared load range {report.force_low:.3g}..{report.force_high:.3g} N "
           f"(reference load x {scale:.6g})")
    if args.out:
        write_json(args.out, report.to_dict())
    p.footer_ok()
    return 0
