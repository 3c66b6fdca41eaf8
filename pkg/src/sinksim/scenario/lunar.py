"""Curve-to-curve comparison of sinkage records on a shared force axis."""
from __future__ import annotations
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..granular.vec import FloatArray
from ..mbd.profile import EARTH_GRAVITY, MOON_GRAVITY
from ..utils.errors import ComparisonError
from .sinkage import RunRecord

LUNAR_SCALE = MOON_GRAVITY / EARTH_GRAVITY
GRID_POINTS = 100


@dataclass(frozen=True)
class ComparisonReport:
    mean_pct: float
    sd_pct: float
    min_diff: float
    max_diff: float
    points: int
    force_low: float
    force_high: float
    force_scale: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def table(self) -> str:
        """One-row table in mm, columns Mean (%), SD (%), Min (mm), Max (mm)."""
        head = f"{'Mean (%)':>10} {'SD (%)':>10} {'Min (mm)':>10} {'Max (mm)':>10}"
        row = (f"{self.mean_pct:>10.2f} {self.sd_pct:>10.2f} "
               f"{self.min_diff * 1e3:>10.2f} {self.max_diff * 1e3:>10.2f}")
        return f"{head}\n{row}"


def _monotone(force: FloatArray, sinkage: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Sort by force; on repeated force values keep the last sample (end of a hold)."""
    order = np.argsort(force, kind="stable")
    f, z = force[order], sinkage[order]
    last = np.append(f[1:] != f[:-1], True) if len(f) else np.zeros(0, dtype=bool)
    return f[last], z[last]


def curve_difference(
    reference: tuple[Any, Any],
    candidate: tuple[Any, Any],
    force_scale: float = 1.0,
    points: int = GRID_POINTS,
) -> ComparisonReport:
    """Statistics of |candidate - reference| over the overlapping force range.

    Each argument is (force, sinkage). The reference force axis is multiplied
    by `force_scale` first. Percentages use only grid points where the
    reference sinkage is positive.
    """
    rf, rz = (np.asarray(a, dtype=np.float64) for a in reference)
    cf, cz = (np.asarray(a, dtype=np.float64) for a in candidate)
    rf, rz = _monotone(rf * force_scale, rz)
    cf, cz = _monotone(cf, cz)
    if len(rf) < 2 or len(cf) < 2:
        raise ComparisonError("each curve needs at least two distinct force values")
    lo = max(rf[0], cf[0])
    hi = min(rf[-1], cf[-1])
    if not hi > lo:
        raise ComparisonError(
            f"force ranges do not overlap ([{rf[0]:.4g}, {rf[-1]:.4g}] vs "
            f"[{cf[0]:.4g}, {cf[-1]:.4g}] N)"
        )
    grid = np.linspace(lo, hi, points)
    ref = np.interp(grid, rf, rz)
    cand = np.interp(grid, cf, cz)
    diff = np.abs(cand - ref)
    positive = ref > 0
    if not np.any(positive):
        raise ComparisonError("reference sinkage is never positive on the shared range")
    pct = 100.0 * diff[positive] / ref[positive]
    return ComparisonReport(
        mean_pct=float(np.mean(pct)),
        sd_pct=float(np.std(pct)),
        min_diff=float(diff.min()),
        max_diff=float(diff.max()),
        points=points,
        force_low=float(lo),
        force_high=float(hi),
        force_scale=force_scale,
    )


def lunar_compare(earth: RunRecord, lunar: RunRecord,
                  scale: float = LUNAR_SCALE) -> ComparisonReport:
    """Compare a lunar run with an Earth run whose forces are scaled by 1.62 / 9.81."""
    return curve_difference(earth.curve(), lunar.curve(), force_scale=scale)
