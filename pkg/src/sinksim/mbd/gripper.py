"""The compliant gripper: a palm on a load rail, eight spring-loaded finger
sliders and four torsion-sprung phalanges per finger.

Body order is palm, then finger by finger: slider, phalanx 1..4. With the
default mount that is 41 bodies and 41 joint coordinates.
"""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Literal, Optional

import numpy as np

from ..coupling.shapes import CollisionShape
from ..granular.vec import FloatArray, rotation_matrix
from ..utils.errors import ConfigError
from .joints import JointSpec
from .tree import BodySpec, KinematicTree

PalmMount = Literal["rail", "free"]


@dataclass(frozen=True)
class GripperGeometry:
    fingers: int = 8
    phalanges: int = 4
    footprint: float = 0.25
    palm_radius: float = 0.045
    palm_half_height: float = 0.008
    palm_rounding: float = 0.003
    slider_span: float = 0.015
    slider_radius: float = 0.005
    phalanx_length: float = 0.04
    phalanx_radius: float = 0.005
    palm_mass: float = 1.1
    slider_mass: float = 0.02
    phalanx_mass: float = 0.0075
    phalanx_stiffness: float = 0.5
    slider_stiffness: float = 500.0
    damping_ratio: float = 0.2
    limit_factor: float = 100.0
    phalanx_range: float = 0.5
    slider_range: float = 0.5
    tendon_torque: float = 0.0
    palm_mount: PalmMount = "rail"

    def validate(self, path: str = "gripper") -> None:
        for name in ("footprint", "palm_radius", "palm_half_height", "palm_rounding",
                     "slider_span", "slider_radius", "phalanx_length", "phalanx_radius",
                     "palm_mass", "slider_mass", "phalanx_mass"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", path=f"{path}.{name}")
        for name in ("phalanx_stiffness", "slider_stiffness", "damping_ratio", "limit_factor",
                     "phalanx_range", "slider_range"):
            if getattr(self, name) < 0:
                raise ConfigError("must be >= 0", path=f"{path}.{name}")
        if self.fingers < 1 or self.phalanges < 1:
            raise ConfigError("need at least one finger with one phalanx", path=path)
        if self.palm_rounding > self.palm_half_height:
            raise ConfigError("must not exceed palm_half_height", path=f"{path}.palm_rounding")
        if self.palm_mount not in ("rail", "free"):
            raise ConfigError("must be 'rail' or 'free'", path=f"{path}.palm_mount")

    @property
    def total_mass(self) -> float:
        return (self.palm_mass + self.fingers * self.slider_mass
                + self.fingers * self.phalanges * self.phalanx_mass)

    def scaled(self, s: float) -> GripperGeometry:
        """Lengths times s, masses times s^2; spring constants unchanged."""
        lengths = ("footprint", "palm_radius", "palm_half_height", "palm_rounding",
                   "slider_span", "slider_radius", "phalanx_length", "phalanx_radius")
        masses = ("palm_mass", "slider_mass", "phalanx_mass")
        changes: dict[str, Any] = {k: getattr(self, k) * s for k in lengths}
        changes.update({k: getattr(self, k) * s * s for k in masses})
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def footprint_diameter(geom: GripperGeometry, alpha: float) -> float:
    """Diameter of the smallest palm-centred circle holding every shape, all phalanges at alpha."""
    reach = geom.palm_radius
    tip = geom.palm_radius + geom.slider_span
    reach = max(reach, tip + geom.slider_radius)
    r = tip
    for k in range(1, geom.phalanges + 1):
        r += geom.phalanx_length * math.cos(k * alpha)
        reach = max(reach, r + geom.phalanx_radius)
    reach = max(reach, tip + geom.phalanx_radius)
    return 2.0 * reach


def rest_angle(geom: GripperGeometry, iterations: int = 80) -> float:
    """Common phalanx rest angle that gives the configured footprint (bisection)."""
    lo, hi = 0.0, math.pi / 3.0
    f_lo = footprint_diameter(geom, lo) - geom.footprint
    f_hi = footprint_diameter(geom, hi) - geom.footprint
    if f_lo < 0 or f_hi > 0:
        raise ConfigError(
            f"footprint {geom.footprint:g} m unreachable with these finger lengths "
            f"(range {footprint_diameter(geom, hi):.4g}..{footprint_diameter(geom, lo):.4g} m)",
            path="gripper.footprint",
        )
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if footprint_diameter(geom, mid) - geom.footprint > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _capsule_inertia(mass: float, length: float, radius: float) -> FloatArray:
    """Solid-rod approximation about the COM; x is the long axis."""
    axial = 0.5 * mass * radius * radius
    transverse = mass * (3.0 * radius * radius + length * length) / 12.0
    return np.array([axial, transverse, transverse])


def _disc_inertia(mass: float, radius: float, half_height: float) -> FloatArray:
    h = 2.0 * half_height
    transverse = mass * (3.0 * radius * radius + h * h) / 12.0
    return np.array([transverse, transverse, 0.5 * mass * radius * radius])


def build_gripper(
    geom: GripperGeometry,
    material: int,
    palm_origin: Any = (0.0, 0.0, 0.0),
    rail_axis: Any = (0.0, 0.0, 1.0),
    gravity: Any = (0.0, 0.0, -9.81),
) -> KinematicTree:
    """Tree for `geom` with the palm centre at `palm_origin`, all joints at rest.

    The palm slides along `rail_axis`; with `palm_mount="free"` it instead
    gets three translations and three rotations through massless bodies.
    """
    geom.validate()
    alpha = rest_angle(geom)
    u = np.asarray(rail_axis, dtype=np.float64)
    u = u / np.linalg.norm(u)
    origin = np.asarray(palm_origin, dtype=np.float64)

    bodies: list[BodySpec] = []
    joints: list[JointSpec] = []
    parents: list[int] = []

    if geom.palm_mount == "rail":
        mount = [JointSpec("prismatic", u, parent_offset=origin, name="rail")]
    else:
        mount = [
            JointSpec("prismatic", np.eye(3)[0], parent_offset=origin, name="free_x"),
            JointSpec("prismatic", np.eye(3)[1], name="free_y"),
            JointSpec("prismatic", np.eye(3)[2], name="free_z"),
            JointSpec("revolute", np.eye(3)[0], name="free_rx"),
            JointSpec("revolute", np.eye(3)[1], name="free_ry"),
        ]
        for k, joint in enumerate(mount):
            bodies.append(BodySpec(f"mount{k}", 0.0, np.zeros(3), virtual=True))
            joints.append(joint)
            parents.append(k - 1)
        mount = [JointSpec("revolute", np.eye(3)[2], name="free_rz")]

    palm = len(bodies)
    bodies.append(BodySpec(
        "palm", geom.palm_mass,
        _disc_inertia(geom.palm_mass, geom.palm_radius, geom.palm_half_height),
        shapes=[CollisionShape("disc", geom.palm_radius, material, body=palm,
                               half_height=geom.palm_half_height, rounding=geom.palm_rounding)],
    ))
    joints.append(mount[0])
    parents.append(palm - 1)

    span, length = geom.slider_span, geom.phalanx_length
    k_lim_ph = geom.limit_factor * geom.phalanx_stiffness
    k_lim_sl = geom.limit_factor * geom.slider_stiffness
    for f in range(geom.fingers):
        phi = 2.0 * math.pi * f / geom.fingers
        e_r = np.array([math.cos(phi), math.sin(phi), 0.0])
        slider = len(bodies)
        bodies.append(BodySpec(
            f"slider{f}", geom.slider_mass,
            _capsule_inertia(geom.slider_mass, span, geom.slider_radius),
            shapes=[CollisionShape("capsule", geom.slider_radius, material, body=slider,
                                   start=(-0.5 * span, 0, 0), end=(0.5 * span, 0, 0))],
        ))
        joints.append(JointSpec(
            "prismatic", e_r,
            parent_offset=e_r * geom.palm_radius,
            child_offset=np.array([0.5 * span, 0.0, 0.0]),
            child_rotation=rotation_matrix((0.0, 0.0, 1.0), phi),
            stiffness=geom.slider_stiffness,
            lower=-geom.slider_range * span, upper=geom.slider_range * span,
            limit_stiffness=k_lim_sl,
            name=f"slider{f}",
        ))
        parents.append(palm)

        parent, parent_half = slider, 0.5 * span
        for k in range(geom.phalanges):
            body = len(bodies)
            bodies.append(BodySpec(
                f"phalanx{f}.{k}", geom.phalanx_mass,
                _capsule_inertia(geom.phalanx_mass, length, geom.phalanx_radius),
                shapes=[CollisionShape("capsule", geom.phalanx_radius, material, body=body,
                                       start=(-0.5 * length, 0, 0), end=(0.5 * length, 0, 0))],
            ))
            # +q about local y turns the finger down
            joints.append(JointSpec(
                "revolute", np.array([0.0, 1.0, 0.0]),
                parent_offset=np.array([parent_half, 0.0, 0.0]),
                child_offset=np.array([0.5 * length, 0.0, 0.0]),
                stiffness=geom.phalanx_stiffness,
                rest=alpha,
                lower=alpha - geom.phalanx_range, upper=alpha + geom.phalanx_range,
                limit_stiffness=k_lim_ph,
                actuation=geom.tendon_torque,
                name=f"phalanx{f}.{k}",
            ))
            parents.append(parent)
            parent, parent_half = body, 0.5 * length

    tree = KinematicTree(bodies, joints, parents, gravity=gravity, palm=palm, palm_axis=u)
    _set_damping(tree, geom)
    return tree


def _set_damping(tree: KinematicTree, geom: GripperGeometry) -> None:
    """Joint dampers at `damping_ratio` of critical, limit dampers critical, from the rest-pose
    joint-space inertia."""
    st = tree.kinematics()
    jv, jw = tree.jacobians(st)
    m = tree.mass_matrix(st, jv, jw)
    for k, joint in enumerate(tree.joints):
        mjj = float(m[k, k])
        joint.damping = geom.damping_ratio * 2.0 * math.sqrt(joint.stiffness * mjj)
        joint.limit_damping = 2.0 * math.sqrt(joint.limit_stiffness * mjj)
    tree._pack()


def resting_footprint(tree: KinematicTree, q: Optional[FloatArray] = None) -> float:
    """Measured footprint: twice the largest distance of any shape from the palm axis."""
    st = tree.kinematics(q=q)
    centre = st.positions[tree.palm]
    axis = st.rotations[tree.palm] @ np.array([0.0, 0.0, 1.0])
    reach = 0.0
    for body in tree.bodies:
        for s in body.shapes:
            r, p = st.rotations[s.body], st.positions[s.body]
            if s.kind == "capsule":
                points = [p + r @ s.start, p + r @ s.end]
            else:
                points = [p + r @ s.center]
            for pt in points:
                rel = pt - centre
                radial = rel - (rel @ axis) * axis
                reach = max(reach, float(np.linalg.norm(radial)) + s.radius)
    return 2.0 * reach


def finger_bodies(tree: KinematicTree, finger: int, geom: GripperGeometry) -> list[int]:
    start = tree.palm + 1 + finger * (1 + geom.phalanges)
    return list(range(start, start + 1 + geom.phalanges))
