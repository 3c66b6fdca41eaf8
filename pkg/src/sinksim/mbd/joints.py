from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np

from ..utils.errors import ConfigError

JointKind = Literal["revolute", "prismatic"]
Actuation = Union[float, Callable[[float], float]]

# allowed limit overshoot before the monitor flags it
ANGLE_TOLERANCE = 1e-3
LENGTH_TOLERANCE = 1e-4


@dataclass
class JointSpec:
    """One tree joint: the coordinate of the child body relative to its parent.

    `axis` is a unit vector in the parent body frame, `parent_offset` the joint
    origin in the parent frame, `child_offset` the child's centre of mass from
    the joint origin in the child frame, and `child_rotation` the child frame
    at q = 0 relative to the parent frame.
    """

    kind: JointKind
    axis: np.ndarray
    parent_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    child_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    child_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    stiffness: float = 0.0
    rest: float = 0.0
    damping: float = 0.0
    lower: float = -math.inf
    upper: float = math.inf
    limit_stiffness: float = 0.0
    limit_damping: float = 0.0
    actuation: Actuation = 0.0
    name: str = ""

    def __post_init__(self) -> None:
        self.axis = np.asarray(self.axis, dtype=np.float64)
        self.parent_offset = np.asarray(self.parent_offset, dtype=np.float64)
        self.child_offset = np.asarray(self.child_offset, dtype=np.float64)
        self.child_rotation = np.asarray(self.child_rotation, dtype=np.float64)
        where = f"joints.{self.name}" if self.name else "joints"
        if self.kind not in ("revolute", "prismatic"):
            raise ConfigError(f"unknown joint kind '{self.kind}'", path=where)
        length = float(np.linalg.norm(self.axis))
        if not abs(length - 1.0) < 1e-9:
            raise ConfigError("joint axis must be a unit vector", path=f"{where}.axis")
        if not self.lower <= self.rest <= self.upper:
            raise ConfigError("need lower <= rest <= upper", path=where)
        for name in ("stiffness", "damping", "limit_stiffness", "limit_damping"):
            if getattr(self, name) < 0:
                raise ConfigError("must be >= 0", path=f"{where}.{name}")

    @property
    def locked(self) -> bool:
        return self.lower == self.upper

    @property
    def tolerance(self) -> float:
        return ANGLE_TOLERANCE if self.kind == "revolute" else LENGTH_TOLERANCE

    def actuation_at(self, t: float) -> float:
        return float(self.actuation(t)) if callable(self.actuation) else float(self.actuation)

    def violation(self, q: float) -> float:
        """Distance outside [lower, upper]; zero inside."""
        if q > self.upper:
            return q - self.upper
        if q < self.lower:
            return self.lower - q
        return 0.0

    def outside(self, q: float) -> bool:
        return q > self.upper or q < self.lower

    def potential(self, q: float) -> float:
        e = 0.5 * self.stiffness * (q - self.rest) ** 2
        v = self.violation(q)
        return e + 0.5 * self.limit_stiffness * v * v


def joint_generalized_force(joint: JointSpec, q: float, qd: float, t: float) -> float:
    f = -joint.stiffness * (q - joint.rest) - joint.damping * qd
    if q > joint.upper:
        f += -joint.limit_stiffness * (q - joint.upper) - joint.limit_damping * qd
    elif q < joint.lower:
        f += -joint.limit_stiffness * (q - joint.lower) - joint.limit_damping * qd
    return f + joint.actuation_at(t)
