from __future__ import annotations
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from ..utils.errors import IntegrationFault
from .materials import MaterialTable
from .vec import FloatArray, IntArray


@dataclass
class ParticleSet:
    """Columnar sphere state. Row k of every array belongs to particle k."""

    positions: FloatArray
    velocities: FloatArray
    angular_velocities: FloatArray
    radii: FloatArray
    material_ids: IntArray
    masses: FloatArray
    inertia: FloatArray
    frozen: np.ndarray

    @classmethod
    def create(
        cls,
        positions: Any,
        radii: Any,
        material_ids: Any,
        materials: MaterialTable,
        velocities: Optional[Any] = None,
        angular_velocities: Optional[Any] = None,
        frozen: Optional[Any] = None,
    ) -> ParticleSet:
        pos = np.array(positions, dtype=np.float64).reshape(-1, 3)
        n = len(pos)
        radii_arr = np.broadcast_to(np.asarray(radii, dtype=np.float64), (n,)).copy()
        mats = np.broadcast_to(np.asarray(material_ids, dtype=np.int64), (n,)).copy()
        if n and (mats.min() < 0 or mats.max() >= len(materials)):
            raise ValueError("material id outside the material table")
        density = np.array([m.density for m in materials.materials])[mats] if n else np.zeros(0)
        masses = density * (4.0 / 3.0) * np.pi * radii_arr**3
        particles = cls(
            positions=pos,
            velocities=_vectors(velocities, n),
            angular_velocities=_vectors(angular_velocities, n),
            radii=radii_arr,
            material_ids=mats,
            masses=masses,
            inertia=0.4 * masses * radii_arr**2,
            frozen=(np.zeros(n, dtype=bool) if frozen is None
                    else np.broadcast_to(np.asarray(frozen, dtype=bool), (n,)).copy()),
        )
        particles.validate()
        return particles

    @classmethod
    def empty(cls, materials: MaterialTable) -> ParticleSet:
        return cls.create(np.zeros((0, 3)), np.zeros(0), np.zeros(0, dtype=np.int64), materials)

    def __len__(self) -> int:
        return len(self.radii)

    def validate(self) -> None:
        if np.any(self.radii <= 0):
            raise ValueError("particle radii must be > 0")
        self.check_finite()

    def check_finite(self, step: Optional[int] = None) -> None:
        for name in ("positions", "velocities", "angular_velocities"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
                raise IntegrationFault(f"non-finite {name} at particle {bad}", step=step)

    def copy(self) -> ParticleSet:
        return ParticleSet(**{k: np.array(v, copy=True) for k, v in self.__dict__.items()})

    def subset(self, mask: Any) -> ParticleSet:
        """Only used while building a bed; particle count is fixed afterwards."""
        return ParticleSet(**{k: np.array(v[mask]) for k, v in self.__dict__.items()})

    @property
    def active(self) -> np.ndarray:
        return ~self.frozen

    @property
    def max_radius(self) -> float:
        return float(self.radii.max()) if len(self) else 0.0


def _vectors(values: Optional[Any], n: int) -> FloatArray:
    if values is None:
        return np.zeros((n, 3))
    return np.array(np.broadcast_to(np.asarray(values, dtype=np.float64), (n, 3)))
