"""Cell-list neighbour search with a Verlet skin.

Particles are binned into cubic cells of side >= max diameter + skin. A pair
can only touch if its cells are within one cell of each other, so scanning the
27-cell block around each particle finds every candidate. The candidate list
is reused until some particle has moved more than half the skin.
"""
from __future__ import annotations
import itertools
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..utils.errors import DomainEscapeError
from .particles import ParticleSet
from .vec import FloatArray, IntArray

_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=np.int64)


@dataclass
class SpatialGrid:
    cell_size: float
    lower: FloatArray
    upper: FloatArray
    skin: float = 0.0
    # state of the last rebuild
    candidates_i: IntArray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    candidates_j: IntArray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    reference_positions: Optional[FloatArray] = None
    rebuilds: int = 0

    @classmethod
    def for_particles(
        cls, particles: ParticleSet, lower: Any, upper: Any, skin_fraction: float = 0.2
    ) -> SpatialGrid:
        diameter = 2.0 * particles.max_radius
        skin = skin_fraction * diameter
        return cls(
            cell_size=max(diameter + skin, 1e-12),
            lower=np.asarray(lower, dtype=np.float64),
            upper=np.asarray(upper, dtype=np.float64),
            skin=skin,
        )

    @property
    def dims(self) -> IntArray:
        return np.ceil((self.upper - self.lower) / self.cell_size).astype(np.int64) + 1

    def cell_coords(self, positions: FloatArray, step: Optional[int] = None) -> IntArray:
        outside = np.any((positions < self.lower) | (positions > self.upper), axis=1)
        if np.any(outside):
            k = int(np.flatnonzero(outside)[0])
            raise DomainEscapeError(
                f"particle {k} left the domain at {positions[k].tolist()}", step=step
            )
        return np.floor((positions - self.lower) / self.cell_size).astype(np.int64)

    def cell_ids(self, coords: IntArray) -> IntArray:
        dx, dy, dz = (int(d) for d in self.dims)
        return (coords[:, 0] * dy + coords[:, 1]) * dz + coords[:, 2]

    def needs_rebuild(self, positions: FloatArray) -> bool:
        if self.reference_positions is None or len(self.reference_positions) != len(positions):
            return True
        moved = positions - self.reference_positions
        max_sq = float(np.max(np.einsum("ij,ij->i", moved, moved))) if len(moved) else 0.0
        return max_sq > (0.5 * self.skin) ** 2

    def rebuild(self, particles: ParticleSet, step: Optional[int] = None) -> None:
        i, j = candidate_pairs(self, particles, step=step)
        d = particles.positions[j] - particles.positions[i]
        reach = particles.radii[i] + particles.radii[j] + self.skin
        keep = np.einsum("ij,ij->i", d, d) < reach * reach
        self.candidates_i, self.candidates_j = i[keep], j[keep]
        self.reference_positions = particles.positions.copy()
        self.rebuilds += 1

    def update(self, particles: ParticleSet, step: Optional[int] = None) -> None:
        if self.needs_rebuild(particles.positions):
            self.rebuild(particles, step=step)
        else:
            self.cell_coords(particles.positions, step=step)


def candidate_pairs(
    grid: SpatialGrid, particles: ParticleSet, step: Optional[int] = None
) -> tuple[IntArray, IntArray]:
    """All (i, j), i < j, whose cells are neighbours; sorted by i * n + j."""
    n = len(particles)
    empty = np.zeros(0, dtype=np.int64)
    if n < 2:
        return empty, empty
    coords = grid.cell_coords(particles.positions, step=step)
    dims = grid.dims
    ids = grid.cell_ids(coords)
    order = np.argsort(ids, kind="stable")
    cells, starts, counts = np.unique(ids[order], return_index=True, return_counts=True)

    found_i: list[IntArray] = []
    found_j: list[IntArray] = []
    for off in _OFFSETS:
        nb = coords + off
        inside = np.all((nb >= 0) & (nb < dims), axis=1)
        p = np.flatnonzero(inside)
        nb_ids = grid.cell_ids(nb[p])
        slot = np.minimum(np.searchsorted(cells, nb_ids), len(cells) - 1)
        hit = cells[slot] == nb_ids
        p, slot = p[hit], slot[hit]
        c = counts[slot]
        if c.sum() == 0:
            continue
        pi = np.repeat(p, c)
        within = np.arange(c.sum()) - np.repeat(np.cumsum(c) - c, c)
        qi = order[np.repeat(starts[slot], c) + within]
        lower = pi < qi
        found_i.append(pi[lower])
        found_j.append(qi[lower])
    if not found_i:
        return empty, empty
    i = np.concatenate(found_i)
    j = np.concatenate(found_j)
    keys = i * n + j
    idx = np.argsort(keys, kind="stable")
    return i[idx], j[idx]


def neighbor_pairs(
    grid: SpatialGrid, particles: ParticleSet, step: Optional[int] = None
) -> tuple[IntArray, IntArray]:
    """Pairs whose spheres overlap, from the grid's current candidate list."""
    grid.update(particles, step=step)
    i, j = grid.candidates_i, grid.candidates_j
    d = particles.positions[j] - particles.positions[i]
    reach = particles.radii[i] + particles.radii[j]
    dist_sq = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
    touching = dist_sq < reach * reach
    return i[touching], j[touching]


def brute_force_pairs(particles: ParticleSet) -> tuple[IntArray, IntArray]:
    """O(n^2) reference enumeration."""
    n = len(particles)
    i, j = np.triu_indices(n, k=1)
    d = particles.positions[j] - particles.positions[i]
    reach = particles.radii[i] + particles.radii[j]
    touching = np.einsum("ij,ij->i", d, d) < reach * reach
    return i[touching].astype(np.int64), j[touching].astype(np.int64)
