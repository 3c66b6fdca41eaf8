"""Angle of repose from the lifted-cylinder test.

A bottomless tube standing on a plate is filled and settled, then lifted at a
constant speed. The heap left on the plate settles and its flank slope is fit
by least squares over the radial height profile.
"""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from ..granular.contact import PairTable
from ..granular.grid import SpatialGrid
from ..granular.integrator import DemState, dem_substep, stable_dt
from ..granular.materials import MaterialTable
from ..granular.parallel import SERIAL, ChunkRunner
from ..granular.particles import ParticleSet
from ..granular.surfaces import BoxBoundary, CylinderWall
from ..granular.vec import FloatArray
from ..utils.errors import ConfigError
from .sandbox import LATTICE_JITTER, LATTICE_SPACING, settle

# fit window, as fractions of the heap radius
FIT_INNER = 0.2
FIT_OUTER = 0.8
DEGENERATE_APEX = 2.0


@dataclass(frozen=True)
class ReposeSpec:
    material: str = "toyoura"
    wall_material: str = "wall"
    particle_diameter: float = 0.004
    cylinder_radius: float = 0.04
    cylinder_height: float = 0.12
    fill_height: float = 0.08
    lift_speed: float = 0.05
    plate_size: float = 0.3
    packing: float = 0.6
    settle_energy: float = 1e-9
    settle_window: float = 0.05
    settle_budget: float = 10.0

    def validate(self, path: str = "repose") -> None:
        for name in ("particle_diameter", "cylinder_radius", "cylinder_height", "fill_height",
                     "lift_speed", "plate_size", "settle_energy", "settle_window",
                     "settle_budget"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", path=f"{path}.{name}")
        if self.cylinder_radius < 3 * self.particle_diameter:
            raise ConfigError("must be at least 3 particle diameters",
                              path=f"{path}.cylinder_radius")
        if self.fill_height > self.cylinder_height:
            raise ConfigError("must not exceed cylinder_height", path=f"{path}.fill_height")
        if self.plate_size < 4 * self.cylinder_radius:
            raise ConfigError("must be at least 4 cylinder radii", path=f"{path}.plate_size")
        if not 0 < self.packing < 0.75:
            raise ConfigError("must lie in (0, 0.75)", path=f"{path}.packing")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class ReposeResult:
    angle_deg: float
    degenerate: bool
    apex_height: float
    heap_radius: float
    profile_r: FloatArray = field(repr=False)
    profile_h: FloatArray = field(repr=False)
    particles: Optional[ParticleSet] = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "angle_deg": self.angle_deg,
            "degenerate": self.degenerate,
            "apex_height_m": self.apex_height,
            "heap_radius_m": self.heap_radius,
        }


def column_positions(spec: ReposeSpec, center: tuple[float, float],
                     rng: np.random.Generator) -> FloatArray:
    d = spec.particle_diameter
    s = LATTICE_SPACING * d
    count = int(math.ceil(spec.packing * math.pi * spec.cylinder_radius**2 * spec.fill_height
                          / (math.pi / 6.0 * d**3)))
    reach = spec.cylinder_radius - 0.5 * s
    k = int(reach // s)
    grid = np.arange(-k, k + 1) * s
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    ring = gx * gx + gy * gy <= reach * reach
    layer = np.stack([gx[ring], gy[ring]], axis=1)
    if len(layer) == 0:
        raise ConfigError("cylinder too narrow for the particle size", path="repose")
    layers = int(math.ceil(count / len(layer)))
    z = 0.5 * s + np.arange(layers) * s
    pos = np.concatenate([
        np.column_stack([layer, np.full(len(layer), zk)]) for zk in z
    ])[:count]
    pos[:, 0] += center[0]
    pos[:, 1] += center[1]
    pos += rng.uniform(-LATTICE_JITTER * d, LATTICE_JITTER * d, size=pos.shape)
    return pos


def radial_profile(particles: ParticleSet, center: tuple[float, float],
                   bin_width: float) -> tuple[FloatArray, FloatArray]:
    """Bin centres and highest particle top per radial bin (NaN for empty bins)."""
    if len(particles) == 0:
        return np.zeros(0), np.zeros(0)
    dx = particles.positions[:, 0] - center[0]
    dy = particles.positions[:, 1] - center[1]
    rho = np.sqrt(dx * dx + dy * dy)
    idx = np.floor(rho / bin_width).astype(np.int64)
    bins = int(idx.max()) + 1
    top = np.full(bins, -np.inf)
    np.maximum.at(top, idx, particles.positions[:, 2] + particles.radii)
    top[np.isneginf(top)] = np.nan
    return (np.arange(bins) + 0.5) * bin_width, top


def fit_heap_angle(r: FloatArray, h: FloatArray, diameter: float) -> ReposeResult:
    """Flank slope of a heap profile; flagged degenerate when the apex is below 2 diameters."""
    valid = np.isfinite(h)
    apex = float(np.nanmax(h)) if np.any(valid) else 0.0
    # heap edge: outermost bin still more than one diameter tall
    tall = np.flatnonzero(valid & (h > diameter))
    heap_radius = float(r[tall[-1]] + 0.5 * (r[1] - r[0])) if len(tall) and len(r) > 1 else 0.0
    window = valid & (r >= FIT_INNER * heap_radius) & (r <= FIT_OUTER * heap_radius)
    angle = 0.0
    if np.count_nonzero(window) >= 2:
        slope, _ = np.polyfit(r[window], h[window], 1)
        angle = max(0.0, math.degrees(math.atan(-slope)))
    degenerate = apex < DEGENERATE_APEX * diameter
    return ReposeResult(angle, degenerate, apex, heap_radius, r, h)


def angle_of_repose(
    spec: ReposeSpec,
    materials: MaterialTable,
    seed: int,
    gravity: float = 9.81,
    safety_fraction: float = 0.2,
    runner: ChunkRunner = SERIAL,
    on_progress: Optional[Callable[[str, float], None]] = None,
) -> ReposeResult:
    spec.validate()
    rng = np.random.default_rng(seed)
    mat = materials.index(spec.material)
    wall = materials.index(spec.wall_material)
    d = spec.particle_diameter
    center = (0.5 * spec.plate_size, 0.5 * spec.plate_size)
    plate = BoxBoundary((spec.plate_size, spec.plate_size, d), wall, name="plate")
    tube = CylinderWall(center, spec.cylinder_radius, spec.cylinder_height, wall)
    table = PairTable(materials)
    g = np.array([0.0, 0.0, -gravity])

    positions = column_positions(spec, center, rng)
    particles = ParticleSet.create(positions, 0.5 * d, mat, materials)
    dt = stable_dt(materials, particles, safety_fraction)
    m = 4.0 * d
    top = max(float(positions[:, 2].max()), spec.cylinder_height)
    grid = SpatialGrid.for_particles(
        particles, (-m, -m, -m), (spec.plate_size + m, spec.plate_size + m, top + m)
    )
    state = DemState(particles, grid)
    surfaces = [plate, tube]

    def report(stage: str) -> Optional[Callable[[float, float], None]]:
        if on_progress is None:
            return None
        return lambda t, ke: on_progress(stage, t)

    settle(state, table, surfaces, g, dt, spec.settle_energy, spec.settle_window,
           spec.settle_budget, runner=runner, on_progress=report("fill"))

    tube.lift_start = state.time
    tube.lift_speed = spec.lift_speed
    heap_top = float(np.max(state.particles.positions[:, 2] + state.particles.radii))
    while tube.bottom_at(state.time) < heap_top + d:
        dem_substep(state, table, surfaces, g, dt, runner=runner)
    settle(state, table, [plate], g, dt, spec.settle_energy, spec.settle_window,
           spec.settle_budget, runner=runner, on_progress=report("heap"))

    r, h = radial_profile(state.particles, center, d)
    result = fit_heap_angle(r, h, d)
    result.particles = state.particles
    return result
