"""Convex collision primitives attached to tree bodies.

Two kinds: a capsule (segment + radius) and a cylinder-disc with rounded
edges. The disc is handled as an inner core cylinder (radius R - rho,
half-height h - rho) swept by a sphere of radius rho, which gives the flat
faces, the rounded rim and the lateral side from one closest-point query.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Any, Literal, NamedTuple, Optional

import numpy as np

from ..granular.particles import ParticleSet
from ..granular.surfaces import SurfaceContacts
from ..granular.vec import FloatArray, cross, dot, rotvec_matrix
from ..utils.errors import ConfigError

ShapeKind = Literal["capsule", "disc"]


@dataclass
class CollisionShape:
    kind: ShapeKind
    radius: float
    material: int
    body: int = 0
    # capsule segment, body frame
    start: FloatArray = field(default_factory=lambda: np.zeros(3))
    end: FloatArray = field(default_factory=lambda: np.zeros(3))
    # disc
    half_height: float = 0.0
    axis: FloatArray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    rounding: float = 0.0
    center: FloatArray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        self.axis = np.asarray(self.axis, dtype=np.float64)
        self.center = np.asarray(self.center, dtype=np.float64)
        if not self.radius > 0:
            raise ConfigError("shape radius must be > 0", path="gripper")
        if self.kind == "disc":
            if not self.half_height > 0:
                raise ConfigError("disc half-height must be > 0", path="gripper")
            if not 0 < self.rounding <= self.half_height or self.rounding >= self.radius:
                raise ConfigError("edge rounding must lie in (0, half-height]", path="gripper")
        elif self.kind != "capsule":
            raise ConfigError(f"unknown shape kind '{self.kind}'", path="gripper")

    def bounding_radius(self) -> float:
        """Radius of a sphere around the body-frame centre that contains the shape."""
        if self.kind == "capsule":
            return 0.5 * float(np.linalg.norm(self.end - self.start)) + self.radius
        return math.hypot(self.radius, self.half_height)

    def local_center(self) -> FloatArray:
        return 0.5 * (self.start + self.end) if self.kind == "capsule" else self.center


class ShapeContact(NamedTuple):
    overlap: float
    # outward surface normal, shape -> particle
    normal: FloatArray
    point: FloatArray
    curvature: float


class _Hits(NamedTuple):
    index: np.ndarray
    overlap: FloatArray
    normal: FloatArray
    point: FloatArray
    curvature: FloatArray


def _capsule_hits(centers: FloatArray, radii: FloatArray, a: FloatArray, b: FloatArray,
                  radius: float) -> _Hits:
    ab = b - a
    length_sq = float(ab @ ab)
    if length_sq > 0:
        t = np.clip(((centers - a) @ ab) / length_sq, 0.0, 1.0)
    else:
        t = np.zeros(len(centers))
    closest = a + t[:, None] * ab
    d = centers - closest
    dist = np.sqrt(dot(d, d))
    overlap = radii + radius - dist
    hit = (overlap > 0) & (dist > 0)
    idx = np.flatnonzero(hit)
    n = d[idx] / dist[idx, None]
    ov = overlap[idx]
    point = closest[idx] + n * (radius - 0.5 * ov)[:, None]
    return _Hits(idx, ov, n, point, np.full(len(idx), radius))


def _disc_hits(centers: FloatArray, radii: FloatArray, c: FloatArray, axis: FloatArray,
               radius: float, half_height: float, rounding: float) -> _Hits:
    core_r = radius - rounding
    core_h = half_height - rounding
    rel = centers - c
    z = rel @ axis
    radial = rel - z[:, None] * axis
    rho = np.sqrt(dot(radial, radial))
    safe = np.where(rho > 0, rho, 1.0)
    e_r = radial / safe[:, None]
    zc = np.clip(z, -core_h, core_h)
    rc = np.minimum(rho, core_r)
    closest = c + zc[:, None] * axis + rc[:, None] * e_r
    d = centers - closest
    dist = np.sqrt(dot(d, d))

    inside = dist == 0
    # centre inside the core: push out through the nearer of face and side
    to_face = core_h - np.abs(z)
    to_side = core_r - rho
    via_face = to_face <= to_side
    sign = np.where(z >= 0, 1.0, -1.0)
    n_inside = np.where(via_face[:, None], sign[:, None] * axis, e_r)
    depth = np.where(via_face, to_face, to_side)

    n = np.where(inside[:, None], n_inside, d / np.where(inside, 1.0, dist)[:, None])
    overlap = np.where(inside, radii + rounding + depth, radii + rounding - dist)

    on_face = np.abs(z) > core_h
    on_side = rho > core_r
    curvature = np.where(on_face & on_side, rounding, np.where(on_side, radius, math.inf))
    curvature = np.where(inside & ~via_face, radius, curvature)

    idx = np.flatnonzero(overlap > 0)
    ov = overlap[idx]
    surface = closest[idx] + n[idx] * np.where(inside[idx], depth[idx], 0.0)[:, None]
    point = surface + n[idx] * (rounding - 0.5 * ov)[:, None]
    return _Hits(idx, ov, n[idx], point, curvature[idx])


def _hits(shape: CollisionShape, rotation: FloatArray, position: FloatArray,
          centers: FloatArray, radii: FloatArray) -> _Hits:
    if shape.kind == "capsule":
        a = position + rotation @ shape.start
        b = position + rotation @ shape.end
        return _capsule_hits(centers, radii, a, b, shape.radius)
    return _disc_hits(centers, radii, position + rotation @ shape.center, rotation @ shape.axis,
                      shape.radius, shape.half_height, shape.rounding)


def sphere_shape_contact(
    center: Any, radius: float, shape: CollisionShape,
    rotation: Any = None, position: Any = None,
) -> Optional[ShapeContact]:
    """Overlap of one sphere with a posed shape, or None when they do not touch."""
    rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
    pos = np.zeros(3) if position is None else np.asarray(position, dtype=np.float64)
    h = _hits(shape, rot, pos, np.asarray(center, dtype=np.float64).reshape(1, 3),
              np.array([float(radius)]))
    if len(h.index) == 0:
        return None
    return ShapeContact(float(h.overlap[0]), h.normal[0], h.point[0], float(h.curvature[0]))


@dataclass
class BodyWindow:
    """Body states at the start of a coupling window, extrapolated linearly inside it."""

    start: float
    rotations: FloatArray
    positions: FloatArray
    velocities: FloatArray
    angular_velocities: FloatArray

    def at(self, time: float) -> tuple[FloatArray, FloatArray]:
        """Pose at `time`, extrapolated from the previous MBD state.

        The window is entered with the tree state at `start`; the tree has not yet
        produced its end-of-window state, so positions advance along `velocities`
        and rotations along `angular_velocities`, both frozen at `start`.
        """
        s = time - self.start
        pos = self.positions + self.velocities * s
        rot = np.array([
            rotvec_matrix(w * s) @ r for w, r in zip(self.angular_velocities, self.rotations)
        ])
        return rot, pos


class ShapeSet:
    """All gripper shapes as one contact surface; element k is shape k."""

    name = "gripper"

    def __init__(self, shapes: list[CollisionShape]) -> None:
        self.shapes = shapes
        self.bodies = np.array([s.body for s in shapes], dtype=np.int64)
        self.window: Optional[BodyWindow] = None

    @property
    def size(self) -> int:
        return len(self.shapes)

    def set_window(self, window: BodyWindow) -> None:
        self.window = window

    def query(self, particles: ParticleSet, time: float) -> SurfaceContacts:
        if self.window is None or len(particles) == 0 or not self.shapes:
            return SurfaceContacts.empty()
        rot, pos = self.window.at(time)
        vel = self.window.velocities
        omega = self.window.angular_velocities
        reach = particles.max_radius

        centers = np.array([pos[s.body] + rot[s.body] @ s.local_center() for s in self.shapes])
        bound = np.array([s.bounding_radius() for s in self.shapes]) + reach
        lo = (centers - bound[:, None]).min(axis=0)
        hi = (centers + bound[:, None]).max(axis=0)
        near = np.flatnonzero(np.all((particles.positions >= lo) & (particles.positions <= hi),
                                     axis=1))
        parts: list[SurfaceContacts] = []
        if len(near) == 0:
            return SurfaceContacts.empty()
        xs = particles.positions[near]
        rs = particles.radii[near]
        for k, shape in enumerate(self.shapes):
            d = xs - centers[k]
            close = np.flatnonzero(dot(d, d) < bound[k] * bound[k])
            if len(close) == 0:
                continue
            b = shape.body
            h = _hits(shape, rot[b], pos[b], xs[close], rs[close])
            if len(h.index) == 0:
                continue
            m = len(h.index)
            lever = h.point - pos[b]
            parts.append(SurfaceContacts(
                particle=near[close[h.index]],
                element=np.full(m, k, dtype=np.int64),
                overlap=h.overlap,
                normal=-h.normal,
                point=h.point,
                curvature=h.curvature,
                velocity=vel[b] + cross(omega[b], lever),
                angular_velocity=np.broadcast_to(omega[b], (m, 3)).copy(),
                material=np.full(m, shape.material, dtype=np.int64),
            ))
        return SurfaceContacts.concat(parts)

    def lowest_point(self, rotations: FloatArray, positions: FloatArray) -> float:
        """Smallest world z reached by any shape."""
        low = math.inf
        for s in self.shapes:
            r, p = rotations[s.body], positions[s.body]
            if s.kind == "capsule":
                z = min((p + r @ s.start)[2], (p + r @ s.end)[2]) - s.radius
            else:
                ax = r @ s.axis
                c = p + r @ s.center
                core_r = s.radius - s.rounding
                tilt = math.sqrt(max(0.0, 1.0 - ax[2] * ax[2]))
                z = c[2] - abs(ax[2]) * (s.half_height - s.rounding) - tilt * core_r - s.rounding
            low = min(low, float(z))
        return low
