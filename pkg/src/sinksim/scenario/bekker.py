"""Power-law pressure-sinkage fit, p = k * z**n, by least squares in log-log space."""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from ..utils.errors import FitError
from .sinkage import RunRecord

MIN_POINTS = 5
# |n| below this, or an RMS log residual above the next, marks the fit degenerate
FLAT_EXPONENT = 1e-6
NOISY_RESIDUAL = 0.5


@dataclass(frozen=True)
class BekkerFit:
    k: float
    n: float
    area: float
    residual: float
    points: int

    @property
    def degenerate(self) -> bool:
        return abs(self.n) < FLAT_EXPONENT or self.residual > NOISY_RESIDUAL

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["degenerate"] = self.degenerate
        return out


def palm_area(palm_radius: float) -> float:
    return math.pi * palm_radius * palm_radius


def fit_power_law(sinkage: Any, force: Any, area: float) -> BekkerFit:
    """Fit on the points with sinkage > 0 and force > 0; pressure is force / area."""
    if not area > 0:
        raise FitError("contact area must be > 0")
    z = np.asarray(sinkage, dtype=np.float64)
    p = np.asarray(force, dtype=np.float64) / area
    keep = np.isfinite(z) & np.isfinite(p) & (z > 0) & (p > 0)
    count = int(np.count_nonzero(keep))
    if count < MIN_POINTS:
        raise FitError(f"need at least {MIN_POINTS} points with sinkage > 0, got {count}")
    lz, lp = np.log(z[keep]), np.log(p[keep])
    if np.ptp(lz) == 0:
        raise FitError("all sinkage values are equal")
    n, intercept = np.polyfit(lz, lp, 1)
    resid = lp - (n * lz + intercept)
    rms = float(np.sqrt(np.mean(resid * resid)))
    return BekkerFit(float(math.exp(intercept)), float(n), area, rms, count)


def bekker_fit(record: RunRecord, area: float) -> BekkerFit:
    force, z = record.curve()
    return fit_power_law(z, force, area)
