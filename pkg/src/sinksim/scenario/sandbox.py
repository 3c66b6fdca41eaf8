"""Granular bed generation: lattice pour, settle, trim to depth, settle again."""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Optional

import numpy as np

from ..granular.contact import PairTable
from ..granular.grid import SpatialGrid
from ..granular.integrator import DemState, dem_substep, diagnostics, stable_dt
from ..granular.materials import MaterialTable
from ..granular.parallel import SERIAL, ChunkRunner
from ..granular.particles import ParticleSet
from ..granular.surfaces import BoxBoundary, ContactSurface
from ..granular.vec import FloatArray
from ..utils.errors import ConfigError, SettleTimeoutError

# centre-to-centre lattice spacing and jitter, in diameters; never overlapping
LATTICE_SPACING = 1.1
LATTICE_JITTER = 0.04


@dataclass(frozen=True)
class SandboxSpec:
    box: tuple[float, float, float] = (0.446, 0.332, 0.218)
    fill_depth: float = 0.100
    material: str = "toyoura"
    wall_material: str = "wall"
    particle_diameter: float = 0.001
    # fixed particle count instead of the volume estimate
    particle_count: Optional[int] = None
    packing: float = 0.62
    overfill: float = 1.1
    settle_energy: float = 1e-9
    settle_window: float = 0.05
    settle_budget: float = 5.0

    def validate(self, path: str = "sandbox") -> None:
        if len(self.box) != 3 or any(not v > 0 for v in self.box):
            raise ConfigError("three positive dimensions required", path=f"{path}.box")
        if not 0 < self.fill_depth < self.box[2]:
            raise ConfigError("must be > 0 and below the box height", path=f"{path}.fill_depth")
        if not 0 < self.particle_diameter <= self.fill_depth / 10:
            raise ConfigError("must be > 0 and at most fill_depth / 10",
                              path=f"{path}.particle_diameter")
        if self.particle_count is not None and self.particle_count < 1:
            raise ConfigError("must be >= 1", path=f"{path}.particle_count")
        if not 0 < self.packing < 0.75:
            raise ConfigError("must lie in (0, 0.75)", path=f"{path}.packing")
        if self.overfill < 1:
            raise ConfigError("must be >= 1", path=f"{path}.overfill")
        for name in ("settle_energy", "settle_window", "settle_budget"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", path=f"{path}.{name}")

    @property
    def radius(self) -> float:
        return 0.5 * self.particle_diameter

    def target_count(self) -> int:
        if self.particle_count is not None:
            return self.particle_count
        lx, ly, _ = self.box
        volume = lx * ly * self.fill_depth * self.packing * self.overfill
        return int(math.ceil(volume / (math.pi / 6.0 * self.particle_diameter**3)))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["box"] = list(self.box)
        return out


@dataclass
class SettledBed:
    state: DemState
    box: BoxBoundary
    materials: MaterialTable
    spec: SandboxSpec
    seed: int
    dt_dem: float
    actual_depth: float
    settle_time: float = 0.0
    settle_steps: int = 0

    @property
    def particles(self) -> ParticleSet:
        return self.state.particles

    def metadata(self) -> dict[str, Any]:
        ke = diagnostics(self.particles).kinetic_energy
        return {
            "box": list(self.box.dimensions),
            "seed": self.seed,
            "particle_count": len(self.particles),
            "actual_depth_m": self.actual_depth,
            "dt_dem_s": self.dt_dem,
            "settle_time_s": self.settle_time,
            "settle_steps": self.settle_steps,
            "kinetic_energy_J": ke,
            "sandbox": self.spec.to_dict(),
            "materials": [m.to_dict() for m in self.materials.materials],
            "interactions": [i.to_dict() for i in self.materials.interactions],
        }


def lattice_positions(spec: SandboxSpec, count: int, rng: np.random.Generator) -> FloatArray:
    """`count` jittered simple-cubic sites inside the box footprint, filled bottom-up."""
    lx, ly, _ = spec.box
    d = spec.particle_diameter
    s = LATTICE_SPACING * d
    nx = int((lx - d) // s) + 1
    ny = int((ly - d) // s) + 1
    if nx < 1 or ny < 1:
        raise ConfigError("box narrower than one particle", path="sandbox.box")
    layers = int(math.ceil(count / (nx * ny)))
    ix, iy, iz = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(layers), indexing="ij")
    order = np.lexsort((ix.ravel(), iy.ravel(), iz.ravel()))
    sites = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)[order][:count]
    # centre the footprint
    x0 = 0.5 * (lx - (nx - 1) * s)
    y0 = 0.5 * (ly - (ny - 1) * s)
    pos = sites * s + np.array([x0, y0, 0.5 * d + 0.5 * (s - d)])
    pos += rng.uniform(-LATTICE_JITTER * d, LATTICE_JITTER * d, size=pos.shape)
    return pos


def bed_domain(spec: SandboxSpec, top: float) -> tuple[FloatArray, FloatArray]:
    lx, ly, lz = spec.box
    m = 4.0 * spec.particle_diameter
    upper_z = max(2.0 * lz, top + m)
    return np.array([-m, -m, -m]), np.array([lx + m, ly + m, upper_z])


def settle(
    state: DemState,
    table: PairTable,
    surfaces: list[ContactSurface],
    gravity: FloatArray,
    dt: float,
    energy: float,
    window: float,
    budget: float,
    runner: ChunkRunner = SERIAL,
    on_progress: Optional[Callable[[float, float], None]] = None,
) -> int:
    """Run until the mean kinetic energy per particle stays below `energy` for `window` seconds.

    Returns the substep count; raises SettleTimeoutError once `budget` seconds have passed.
    """
    n = max(len(state.particles), 1)
    start = state.time
    quiet_since: Optional[float] = None
    steps = 0
    report_every = max(1, int(round(0.1 / dt)))
    while True:
        dem_substep(state, table, surfaces, gravity, dt, runner=runner)
        steps += 1
        mean_ke = diagnostics(state.particles).kinetic_energy / n
        if mean_ke < energy:
            if quiet_since is None:
                quiet_since = state.time
            if state.time - quiet_since >= window - 1e-12:
                return steps
        else:
            quiet_since = None
        if on_progress is not None and steps % report_every == 0:
            on_progress(state.time - start, mean_ke)
        if state.time - start > budget:
            raise SettleTimeoutError(
                f"bed did not settle within {budget:g} s simulated "
                f"(mean kinetic energy {mean_ke:.3g} J per particle)"
            )


def fill_and_settle(
    spec: SandboxSpec,
    materials: MaterialTable,
    seed: int,
    gravity: float = 9.81,
    safety_fraction: float = 0.2,
    runner: ChunkRunner = SERIAL,
    on_progress: Optional[Callable[[float, float], None]] = None,
) -> SettledBed:
    """Pour an over-filled lattice into the box, settle, cut back to `fill_depth`, settle again."""
    spec.validate()
    rng = np.random.default_rng(seed)
    mat = materials.index(spec.material)
    wall = materials.index(spec.wall_material)
    box = BoxBoundary(spec.box, wall)
    table = PairTable(materials)
    g = np.array([0.0, 0.0, -gravity])

    positions = lattice_positions(spec, spec.target_count(), rng)
    particles = ParticleSet.create(positions, spec.radius, mat, materials)
    dt = stable_dt(materials, particles, safety_fraction)
    lower, upper = bed_domain(spec, float(positions[:, 2].max()) if len(positions) else 0.0)
    state = DemState(particles, SpatialGrid.for_particles(particles, lower, upper))
    steps = settle(state, table, [box], g, dt, spec.settle_energy, spec.settle_window,
                   spec.settle_budget, runner=runner, on_progress=on_progress)

    if spec.particle_count is None:
        p = state.particles
        keep = p.positions[:, 2] + p.radii <= spec.fill_depth
        if not np.all(keep):
            state = DemState(p.subset(keep), state.grid, step=state.step, time=state.time)
            state.grid.reference_positions = None
            steps += settle(state, table, [box], g, dt, spec.settle_energy, spec.settle_window,
                            spec.settle_budget, runner=runner, on_progress=on_progress)

    depth = mean_surface_height(state.particles, spec.particle_diameter, spec.box)
    return SettledBed(state, box, materials, spec, seed, dt, depth,
                      settle_time=state.time, settle_steps=steps)


def surface_height_map(
    particles: ParticleSet,
    resolution: float,
    extent: tuple[float, float],
    origin: tuple[float, float] = (0.0, 0.0),
) -> FloatArray:
    """Highest particle top per (x, y) cell; NaN where no particle centre falls."""
    if not resolution > 0:
        raise ConfigError("must be > 0", path="resolution")
    nx = max(1, int(math.ceil(extent[0] / resolution)))
    ny = max(1, int(math.ceil(extent[1] / resolution)))
    heights = np.full((nx, ny), -np.inf)
    if len(particles):
        pos = particles.positions
        ix = np.floor((pos[:, 0] - origin[0]) / resolution).astype(np.int64)
        iy = np.floor((pos[:, 1] - origin[1]) / resolution).astype(np.int64)
        inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        top = pos[:, 2] + particles.radii
        np.maximum.at(heights, (ix[inside], iy[inside]), top[inside])
    heights[np.isneginf(heights)] = np.nan
    return heights


def mean_surface_height(particles: ParticleSet, diameter: float,
                        box: tuple[float, float, float]) -> float:
    """Average free-surface height over the box, ignoring one cell along each wall."""
    if len(particles) == 0:
        return 0.0
    resolution = 2.0 * diameter
    h = surface_height_map(particles, resolution, (box[0], box[1]))
    inner = h[1:-1, 1:-1] if min(h.shape) > 2 else h
    return float(np.nanmean(inner)) if np.any(np.isfinite(inner)) else 0.0


def local_surface_height(particles: ParticleSet, center: Any, radius: float) -> float:
    """Highest particle top within `radius` of `center` horizontally, 0 for an empty patch."""
    if len(particles) == 0:
        return 0.0
    c = np.asarray(center, dtype=np.float64)
    dx = particles.positions[:, 0] - c[0]
    dy = particles.positions[:, 1] - c[1]
    near = dx * dx + dy * dy <= radius * radius
    if not np.any(near):
        return 0.0
    return float(np.max(particles.positions[near, 2] + particles.radii[near]))
