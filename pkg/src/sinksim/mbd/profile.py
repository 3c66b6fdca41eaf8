"""Palm load schedule.

sigma(t) = STEP(t, t1, mg, t2, -preload) + STEP(t, t3, 0, t4, -delta_final)

Positive sigma lifts the gripper (weight compensation), negative pushes it
into the bed. The load vector is sigma along (sin theta, 0, cos theta).
"""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional

import numpy as np

from ..utils.errors import ConfigError

EARTH_GRAVITY = 9.81
MOON_GRAVITY = 1.62


def step_interp(t: float, t0: float, h0: float, t1: float, h1: float) -> float:
    """Cubic blend from h0 to h1 with zero slope at both ends."""
    if t0 > t1:
        raise ConfigError(f"step start {t0:g} after step end {t1:g}", path="load")
    if t <= t0:
        return h0
    if t >= t1:
        return h1
    u = (t - t0) / (t1 - t0)
    return h0 + (h1 - h0) * u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class HoldSchedule:
    """Discrete loading: `increment` newtons per ramp, each followed by a hold."""

    increment: float = 5.0
    ramp: float = 0.5
    hold: float = 5.0

    def steps(self, total: float) -> list[float]:
        full = int(total // self.increment)
        rest = total - full * self.increment
        out = [self.increment] * full
        if rest > 1e-12:
            out.append(rest)
        return out


@dataclass(frozen=True)
class LoadProfile:
    theta: float = 0.0
    t1: float = 0.0
    t2: float = 0.5
    t3: float = 0.5
    t4: float = 10.0
    mg: float = 1.5 * EARTH_GRAVITY
    preload: float = 5.0
    delta_final: float = 61.0
    holds: Optional[HoldSchedule] = None
    _stages: tuple[tuple[float, float, float], ...] = field(
        default=(), init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not self.t1 <= self.t2 <= self.t3:
            raise ConfigError("need t1 <= t2 <= t3", path="load")
        if self.mg < 0:
            raise ConfigError("must be >= 0", path="load.mg")
        if not self.preload > 0:
            raise ConfigError("must be > 0", path="load.preload")
        if not self.delta_final > 0:
            raise ConfigError("must be > 0", path="load.final")
        stages: list[tuple[float, float, float]] = []
        if self.holds is None:
            if self.t4 < self.t3:
                raise ConfigError("need t3 <= t4", path="load.t4")
            stages.append((self.t3, self.t4, self.delta_final))
        else:
            start = self.t3
            for inc in self.holds.steps(self.delta_final):
                stages.append((start, start + self.holds.ramp, inc))
                start += self.holds.ramp + self.holds.hold
            # t4 is the end of the last ramp
            object.__setattr__(self, "t4", stages[-1][1])
        object.__setattr__(self, "_stages", tuple(stages))

    @property
    def peak(self) -> float:
        """Largest push into the bed, |sigma| at t >= t4."""
        return self.preload + self.delta_final

    @property
    def end_time(self) -> float:
        return self.t4

    def sigma(self, t: float) -> float:
        s = step_interp(t, self.t1, self.mg, self.t2, -self.preload)
        for t0, t1, inc in self._stages:
            s += step_interp(t, t0, 0.0, t1, -inc)
        return s

    def axis(self) -> np.ndarray:
        return np.array([math.sin(self.theta), 0.0, math.cos(self.theta)])

    def load(self, t: float) -> np.ndarray:
        return self.sigma(t) * self.axis()

    def scaled(self, factor: float) -> LoadProfile:
        """Preload and final load multiplied by `factor` (gravity scaling)."""
        return replace(self, preload=self.preload * factor, delta_final=self.delta_final * factor)

    def to_dict(self) -> dict[str, Any]:
        out = {k: v for k, v in asdict(self).items() if not k.startswith("_")}
        out["theta_deg"] = math.degrees(out.pop("theta"))
        return out


def sigma_load(t: float, profile: LoadProfile) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    return profile.sigma(t)


def load_vector(t: float, profile: LoadProfile) -> np.ndarray:
    return profile.load(t)


def gravity_vector(magnitude: float, theta: float) -> np.ndarray:
    """Gravity in the box frame for a slope of `theta` (the box itself stays level)."""
    return np.array([-magnitude * math.sin(theta), 0.0, -magnitude * math.cos(theta)])
