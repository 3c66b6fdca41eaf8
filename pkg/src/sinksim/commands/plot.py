from __future__ import annotations
import argparse
from pathlib import Path

from ..utils.errors import SinksimError
from ..utils.io import read_record_csv
from ..utils.printing import PRINTER as p
from ..utils.svg import Series, line_chart


def run(args: argparse.Namespace) -> int:
    """Load (N) against sinkage (mm), one series per record."""
    series = []
    try:
        for path in args.csv:
            force, sinkage = read_record_csv(path).curve()
            series.append(Series(Path(path).stem, force, sinkage * 1e3))
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    target = Path(args.out or "sinkage.svg")
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(line_chart(series, "Load (N)", "Sinkage (mm)", title=args.title),
                      encoding="utf-8")
    p.footer_ok(f"Plot written to {target}")
    return 0
