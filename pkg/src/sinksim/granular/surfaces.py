"""Immobile or prescribed-motion boundaries that particles collide with.

A surface reports its contacts as a `SurfaceContacts` table; the integrator
runs them through the same Hertz-Mindlin code as particle pairs, treating the
surface as a partner of unbounded mass.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from .particles import ParticleSet
from .vec import FloatArray, IntArray


@dataclass
class SurfaceContacts:
    """One row per (particle, surface element) overlap.

    `normal` points from the particle into the surface; `curvature` is the
    local surface radius (inf for a plane); `velocity`/`angular_velocity`
    describe the surface at the contact point.
    """

    particle: IntArray
    element: IntArray
    overlap: FloatArray
    normal: FloatArray
    point: FloatArray
    curvature: FloatArray
    velocity: FloatArray
    angular_velocity: FloatArray
    material: IntArray

    def __len__(self) -> int:
        return len(self.particle)

    @classmethod
    def empty(cls) -> SurfaceContacts:
        z = np.zeros(0)
        zi = np.zeros(0, dtype=np.int64)
        z3 = np.zeros((0, 3))
        return cls(zi, zi, z, z3, z3, z, z3, z3, zi)

    @classmethod
    def concat(cls, parts: list[SurfaceContacts]) -> SurfaceContacts:
        parts = [c for c in parts if len(c)]
        if not parts:
            return cls.empty()
        return cls(**{
            f: np.concatenate([getattr(c, f) for c in parts])
            for f in cls.__dataclass_fields__
        })

    def take(self, idx: Any) -> SurfaceContacts:
        return SurfaceContacts(**{f: getattr(self, f)[idx] for f in self.__dataclass_fields__})


class ContactSurface(Protocol):
    name: str

    @property
    def size(self) -> int:
        """Number of elements; ledger keys are particle * size + element."""
        ...

    def query(self, particles: ParticleSet, time: float) -> SurfaceContacts: ...


def _plane_contacts(
    particles: ParticleSet,
    candidates: IntArray,
    gap: FloatArray,
    outward: Any,
    element: int,
    material: int,
    velocity: Any = (0.0, 0.0, 0.0),
) -> SurfaceContacts:
    """Contacts with a plane; `gap` is the centre-to-plane distance, `outward` the unit normal
    pointing out of the particle's side."""
    overlap = particles.radii[candidates] - gap
    hit = overlap > 0
    idx = candidates[hit]
    k = len(idx)
    normal = np.broadcast_to(np.asarray(outward, dtype=np.float64), (k, 3)).copy()
    ov = overlap[hit]
    point = particles.positions[idx] + normal * (particles.radii[idx] - 0.5 * ov)[:, None]
    return SurfaceContacts(
        particle=idx,
        element=np.full(k, element, dtype=np.int64),
        overlap=ov,
        normal=normal,
        point=point,
        curvature=np.full(k, math.inf),
        velocity=np.broadcast_to(np.asarray(velocity, dtype=np.float64), (k, 3)).copy(),
        angular_velocity=np.zeros((k, 3)),
        material=np.full(k, material, dtype=np.int64),
    )


@dataclass
class BoxBoundary:
    """Open-top box with its floor at z = 0 spanning [0, x] x [0, y]."""

    dimensions: tuple[float, float, float]
    material: int
    name: str = "box"

    def __post_init__(self) -> None:
        if any(not d > 0 for d in self.dimensions):
            raise ValueError("box dimensions must be > 0")

    @property
    def size(self) -> int:
        return 5

    def query(self, particles: ParticleSet, time: float) -> SurfaceContacts:
        lx, ly, lz = self.dimensions
        pos = particles.positions
        r = particles.radii
        below_rim = np.flatnonzero(pos[:, 2] < lz + r)
        everyone = np.arange(len(particles), dtype=np.int64)
        # element ids: 0 floor, 1 x-low, 2 x-high, 3 y-low, 4 y-high
        return SurfaceContacts.concat([
            _plane_contacts(particles, everyone, pos[:, 2], (0, 0, -1), 0, self.material),
            _plane_contacts(particles, below_rim, pos[below_rim, 0], (-1, 0, 0), 1,
                            self.material),
            _plane_contacts(particles, below_rim, lx - pos[below_rim, 0], (1, 0, 0), 2,
                            self.material),
            _plane_contacts(particles, below_rim, pos[below_rim, 1], (0, -1, 0), 3,
                            self.material),
            _plane_contacts(particles, below_rim, ly - pos[below_rim, 1], (0, 1, 0), 4,
                            self.material),
        ])

    def inside(self, positions: FloatArray) -> np.ndarray:
        lx, ly, _ = self.dimensions
        return (
            (positions[:, 0] >= 0) & (positions[:, 0] <= lx)
            & (positions[:, 1] >= 0) & (positions[:, 1] <= ly) & (positions[:, 2] >= 0)
        )


@dataclass
class CylinderWall:
    """Thin bottomless tube with a vertical axis; particles contact its inner face.

    The tube rests with its lower rim at `bottom` until `lift_start`, then rises
    at `lift_speed`.
    """

    center: tuple[float, float]
    radius: float
    height: float
    material: int
    bottom: float = 0.0
    lift_speed: float = 0.0
    lift_start: float = math.inf
    name: str = "cylinder"

    @property
    def size(self) -> int:
        return 1

    def bottom_at(self, time: float) -> float:
        if time <= self.lift_start:
            return self.bottom
        return self.bottom + self.lift_speed * (time - self.lift_start)

    def velocity_at(self, time: float) -> tuple[float, float, float]:
        return (0.0, 0.0, self.lift_speed if time > self.lift_start else 0.0)

    def query(self, particles: ParticleSet, time: float) -> SurfaceContacts:
        z0 = self.bottom_at(time)
        pos = particles.positions
        dx = pos[:, 0] - self.center[0]
        dy = pos[:, 1] - self.center[1]
        rho = np.sqrt(dx * dx + dy * dy)
        in_band = (pos[:, 2] >= z0) & (pos[:, 2] <= z0 + self.height) & (rho > 0)
        in_band &= rho < self.radius
        idx = np.flatnonzero(in_band)
        overlap = particles.radii[idx] - (self.radius - rho[idx])
        hit = overlap > 0
        idx, overlap = idx[hit], overlap[hit]
        k = len(idx)
        normal = np.zeros((k, 3))
        normal[:, 0] = dx[idx] / rho[idx]
        normal[:, 1] = dy[idx] / rho[idx]
        point = pos[idx] + normal * (particles.radii[idx] - 0.5 * overlap)[:, None]
        return SurfaceContacts(
            particle=idx,
            element=np.zeros(k, dtype=np.int64),
            overlap=overlap,
            normal=normal,
            point=point,
            # concave inner face, treated as flat
            curvature=np.full(k, math.inf),
            velocity=np.broadcast_to(np.asarray(self.velocity_at(time)), (k, 3)).copy(),
            angular_velocity=np.zeros((k, 3)),
            material=np.full(k, self.material, dtype=np.int64),
        )

