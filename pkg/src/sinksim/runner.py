from __future__ import annotations
import argparse
from typing import Callable, Optional

from .commands.common import add_config_flags
from .commands.compare import run as cmd_compare
from .commands.fill import run as cmd_fill
from .commands.fit import run as cmd_fit
from .commands.plot import run as cmd_plot
from .commands.repose import run as cmd_repose
from .commands.sink import run as cmd_sink
from .commands.sweep import run as cmd_sweep
from .utils.errors import SinksimError
from .utils.printing import PRINTER as p

COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "fill": cmd_fill,
    "sink": cmd_sink,
    "repose": cmd_repose,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "plot": cmd_plot,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinksim", description="Gripper pressure-sinkage simulation in a DEM sand bed."
    )
    parser.add_argument("--quiet", action="store_true", help="Hide progress lines")
    sub = parser.add_subparsers(dest="command", required=True)

    fill = sub.add_parser("fill", help="Fill and settle a sandbox, write a bed snapshot")
    add_config_flags(fill)
    fill.add_argument("--out", help="Snapshot path (default <output.dir>/bed.txt)")

    sink = sub.add_parser("sink", help="Press the gripper into a bed, write CSV + summary")
    add_config_flags(sink)
    sink.add_argument("--bed", help="Bed snapshot; a fresh bed is settled when omitted")
    sink.add_argument("--slope", type=float, help="Slope angle in degrees")
    sink.add_argument("--t4", type=float, help="End of the final load ramp in seconds")
    sink.add_argument("--out", help="Record CSV path (default <output.dir>/run.csv)")

    repose = sub.add_parser("repose", help="Lifted-cylinder angle-of-repose test")
    add_config_flags(repose)
    repose.add_argument("--out", help="Output directory")

    sweep = sub.add_parser("sweep", help="Slope x entry-duration sweep, one bed per run")
    add_config_flags(sweep)
    sweep.add_argument("--slopes", help="CSV of slope angles in degrees")
    sweep.add_argument("--durations", help="CSV of t4 values in seconds")
    sweep.add_argument("--repose-deg", type=float,
                       help="Repose angle for the slope warning (default: material target)")
    sweep.add_argument("--out", help="Output directory")

    fit = sub.add_parser("fit", help="Bekker power-law fit of recorded curves")
    add_config_flags(fit)
    fit.add_argument("--area", type=float, help="Contact area in m^2 (default: palm disc)")
    fit.add_argument("csv", nargs="+", help="Record CSV files")

    plot = sub.add_parser("plot", help="Load-sinkage chart of recorded curves as SVG")
    plot.add_argument("--out", help="SVG path (default sinkage.svg)")
    plot.add_argument("--title", default="", help="Chart title")
    plot.add_argument("csv", nargs="+", help="Record CSV files")

    compare = sub.add_parser("compare", help="Difference statistics between two curves")
    compare.add_argument("reference", help="Reference record CSV")
    compare.add_argument("candidate", help="Candidate record CSV")
    scale = compare.add_mutually_exclusive_group()
    scale.add_argument("--lunar", action="store_true",
                       help="Scale the reference load by 1.62 / 9.81")
    scale.add_argument("--force-scale", type=float, default=1.0,
                       help="Factor applied to the reference load")
    compare.add_argument("--out", help="Write the report as JSON")
    return parser


def cli(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    p.quiet = args.quiet
    try:
        return COMMANDS[args.command](args)
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code


if __name__ == "__main__":
    raise SystemExit(cli())
