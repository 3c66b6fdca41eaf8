"""One explicit DEM substep: contacts, gravity, semi-implicit Euler.

Forces are gathered per contact in key order and reduced per particle with
`numpy.bincount`, so the result does not depend on how the contact list was
split across threads.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from ..utils.errors import ConfigError, TunnelingError
from .contact import (
    ROLLING_DAMPING_RATIO,
    PairTable,
    hertz_mindlin_force,
    normal_elastic_energy,
    rayleigh_dt,
    rolling_resistance_update,
)
from .grid import SpatialGrid, neighbor_pairs
from .ledger import ContactLedger
from .materials import MaterialTable
from .parallel import SERIAL, ChunkRunner
from .particles import ParticleSet
from .surfaces import ContactSurface, SurfaceContacts
from .vec import FloatArray, IntArray, cross, dot, norm, scatter_add


@dataclass
class DemState:
    particles: ParticleSet
    grid: SpatialGrid
    ledger: ContactLedger = field(default_factory=ContactLedger)
    surface_ledgers: dict[str, ContactLedger] = field(default_factory=dict)
    step: int = 0
    time: float = 0.0

    def surface_ledger(self, name: str) -> ContactLedger:
        return self.surface_ledgers.setdefault(name, ContactLedger())

    def copy(self) -> DemState:
        return DemState(
            particles=self.particles.copy(),
            grid=SpatialGrid(self.grid.cell_size, self.grid.lower.copy(),
                             self.grid.upper.copy(), self.grid.skin),
            ledger=self.ledger.copy(),
            surface_ledgers={k: v.copy() for k, v in self.surface_ledgers.items()},
            step=self.step,
            time=self.time,
        )


@dataclass
class SurfaceLoad:
    """Reactions on one surface during one substep (force/couple act on the surface)."""

    element: IntArray
    point: FloatArray
    force: FloatArray
    couple: FloatArray
    clipping: int = 0

    def __len__(self) -> int:
        return len(self.element)


@dataclass
class SubstepReport:
    pair_contacts: int
    surface_loads: dict[str, SurfaceLoad]
    internal_force_sum: FloatArray
    internal_force_scale: float

    @property
    def clipping(self) -> int:
        return sum(s.clipping for s in self.surface_loads.values())

    @property
    def contacts(self) -> int:
        return self.pair_contacts + sum(len(s) for s in self.surface_loads.values())


class Diagnostics(NamedTuple):
    kinetic_energy: float
    max_speed: float
    contacts: int


class EnergyBreakdown(NamedTuple):
    kinetic: float
    potential: float
    elastic: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential + self.elastic


def substeps_per_window(dt_cpl: float, dt_dem: float) -> int:
    """Number of DEM substeps in one coupling step; dt_cpl must be a multiple of dt_dem."""
    if dt_cpl <= 0 or dt_dem <= 0:
        raise ConfigError("time steps must be > 0", path="solver")
    n = round(dt_cpl / dt_dem)
    if n < 1 or abs(n * dt_dem - dt_cpl) > 1e-9 * dt_cpl:
        raise ConfigError(
            f"dt_cpl={dt_cpl:g} is not an integer multiple of dt_dem={dt_dem:g}",
            path="solver.dt_dem",
        )
    return int(n)


def stable_dt(materials: MaterialTable, particles: ParticleSet, safety_fraction: float) -> float:
    """Smallest Rayleigh step over the particle materials present."""
    if len(particles) == 0:
        return math.inf
    best = math.inf
    for mid in np.unique(particles.material_ids):
        r_min = float(particles.radii[particles.material_ids == mid].min())
        best = min(best, rayleigh_dt(materials[int(mid)], r_min, safety_fraction))
    return best


def _pair_kernel(
    p: ParticleSet,
    i: IntArray,
    j: IntArray,
    table: PairTable,
    spring: FloatArray,
    rolling: FloatArray,
    dt: float,
    damping_ratio: float,
) -> Any:
    def kernel(sl: slice) -> tuple[np.ndarray, ...]:
        a, b = i[sl], j[sl]
        d = p.positions[b] - p.positions[a]
        dist = norm(d)
        n = d / dist[:, None]
        overlap = p.radii[a] + p.radii[b] - dist
        pair = table.effective(p.material_ids[a], p.material_ids[b],
                               p.radii[a], p.radii[b], p.masses[a], p.masses[b])
        lever_a = p.radii[a] - 0.5 * overlap
        lever_b = p.radii[b] - 0.5 * overlap
        w_a, w_b = p.angular_velocities[a], p.angular_velocities[b]
        v_rel = (p.velocities[a] + cross(w_a, lever_a[:, None] * n)) - (
            p.velocities[b] - cross(w_b, lever_b[:, None] * n)
        )
        cf = hertz_mindlin_force(pair, overlap, n, v_rel, spring[sl], dt)
        rt = rolling_resistance_update(pair, overlap, n, (w_a - w_b) * dt,
                                       cf.normal_magnitude, dt, rolling[sl], damping_ratio)
        f = cf.normal_force + cf.tangential_force
        nxft = cross(n, cf.tangential_force)
        t_a = lever_a[:, None] * nxft + rt.torque
        t_b = lever_b[:, None] * nxft - rt.torque
        return f, t_a, t_b, cf.spring, rt.spring
    return kernel


def _surface_kernel(
    p: ParticleSet,
    sc: SurfaceContacts,
    table: PairTable,
    spring: FloatArray,
    rolling: FloatArray,
    dt: float,
    damping_ratio: float,
) -> Any:
    def kernel(sl: slice) -> tuple[np.ndarray, ...]:
        k = sc.particle[sl]
        n = sc.normal[sl]
        overlap = sc.overlap[sl]
        pair = table.effective(p.material_ids[k], sc.material[sl], p.radii[k],
                               sc.curvature[sl], p.masses[k], np.full(len(k), math.inf))
        lever = p.radii[k] - 0.5 * overlap
        w = p.angular_velocities[k]
        v_rel = p.velocities[k] + cross(w, lever[:, None] * n) - sc.velocity[sl]
        cf = hertz_mindlin_force(pair, overlap, n, v_rel, spring[sl], dt)
        rt = rolling_resistance_update(pair, overlap, n, (w - sc.angular_velocity[sl]) * dt,
                                       cf.normal_magnitude, dt, rolling[sl], damping_ratio)
        f = cf.normal_force + cf.tangential_force
        torque = lever[:, None] * cross(n, cf.tangential_force) + rt.torque
        return f, torque, rt.torque, cf.spring, rt.spring
    return kernel


def _sorted_surface_contacts(surface: ContactSurface, particles: ParticleSet,
                             time: float) -> tuple[SurfaceContacts, IntArray]:
    sc = surface.query(particles, time)
    keys = sc.particle * surface.size + sc.element
    order = np.argsort(keys, kind="stable")
    return sc.take(order), keys[order]


def surface_contact_forces(
    particles: ParticleSet,
    surface: ContactSurface,
    ledger: ContactLedger,
    table: PairTable,
    time: float,
    dt: float,
    step: int = 0,
    runner: Optional[ChunkRunner] = None,
    rolling_damping: float = ROLLING_DAMPING_RATIO,
) -> tuple[FloatArray, FloatArray, SurfaceLoad]:
    """Per-particle force/torque from one surface, plus the reactions on the surface.

    Updates `ledger` to hold exactly the contacts active at `time`.
    """
    runner = runner or SERIAL
    n = len(particles)
    sc, keys = _sorted_surface_contacts(surface, particles, time)
    spring, rolling = ledger.fetch(keys)
    f, torque, couple, spring, rolling = runner.run(
        _surface_kernel(particles, sc, table, spring, rolling, dt, rolling_damping), len(sc)
    )
    ledger.replace(keys, spring, rolling, step)
    load = SurfaceLoad(
        element=sc.element, point=sc.point, force=-f, couple=-couple,
        clipping=int(np.count_nonzero(sc.overlap > particles.radii[sc.particle])),
    )
    return scatter_add(sc.particle, f, n), scatter_add(sc.particle, torque, n), load


def dem_substep(
    state: DemState,
    table: PairTable,
    surfaces: Sequence[ContactSurface],
    gravity: Any,
    dt: float,
    runner: Optional[ChunkRunner] = None,
    rolling_damping: float = ROLLING_DAMPING_RATIO,
    tunneling_guard: bool = True,
) -> SubstepReport:
    """Advance `state` by one substep in place and report the surface reactions."""
    runner = runner or SERIAL
    p = state.particles
    n = len(p)
    step = state.step
    force = np.zeros((n, 3))
    torque = np.zeros((n, 3))

    i, j = neighbor_pairs(state.grid, p, step=step)
    pair_keys = i * n + j
    spring, rolling = state.ledger.fetch(pair_keys)
    f, t_i, t_j, spring, rolling = runner.run(
        _pair_kernel(p, i, j, table, spring, rolling, dt, rolling_damping), len(i)
    )
    force += scatter_add(i, f, n) - scatter_add(j, f, n)
    torque += scatter_add(i, t_i, n) + scatter_add(j, t_j, n)
    internal_sum = force.sum(axis=0) if n else np.zeros(3)
    internal_scale = float(np.abs(f).sum()) if len(f) else 0.0
    state.ledger.replace(pair_keys, spring, rolling, step)

    loads: dict[str, SurfaceLoad] = {}
    for surface in surfaces:
        sf, st, loads[surface.name] = surface_contact_forces(
            p, surface, state.surface_ledger(surface.name), table, state.time, dt,
            step=step, runner=runner, rolling_damping=rolling_damping,
        )
        force += sf
        torque += st

    move = p.active
    g = np.asarray(gravity, dtype=np.float64)
    p.velocities[move] += (force[move] / p.masses[move][:, None] + g) * dt
    p.angular_velocities[move] += torque[move] / p.inertia[move][:, None] * dt
    displacement = p.velocities[move] * dt
    if tunneling_guard and len(displacement):
        limit = 0.5 * p.radii[move]
        fast = dot(displacement, displacement) > limit * limit
        if np.any(fast):
            k = int(np.flatnonzero(move)[np.flatnonzero(fast)[0]])
            raise TunnelingError(
                f"particle {k} moved more than half its radius in one substep", step=step
            )
    p.positions[move] += displacement
    p.check_finite(step=step)

    state.step += 1
    state.time += dt
    _prune_separated(state, surfaces)
    return SubstepReport(len(i), loads, internal_sum, internal_scale)


def _prune_separated(state: DemState, surfaces: Sequence[ContactSurface]) -> None:
    """Drop ledger entries whose partners no longer overlap after the position update."""
    p = state.particles
    n = len(p)
    led = state.ledger
    if len(led):
        i, j = led.keys // n, led.keys % n
        d = p.positions[j] - p.positions[i]
        reach = p.radii[i] + p.radii[j]
        keep = dot(d, d) < reach * reach
        led.retain(keep)
    for surface in surfaces:
        sled = state.surface_ledger(surface.name)
        if not len(sled):
            continue
        _, keys = _sorted_surface_contacts(surface, p, state.time)
        keep = np.isin(sled.keys, keys)
        sled.retain(keep)


def diagnostics(particles: ParticleSet, contacts: int = 0) -> Diagnostics:
    if len(particles) == 0:
        return Diagnostics(0.0, 0.0, contacts)
    v2 = dot(particles.velocities, particles.velocities)
    w2 = dot(particles.angular_velocities, particles.angular_velocities)
    ke = 0.5 * float(np.sum(particles.masses * v2) + np.sum(particles.inertia * w2))
    return Diagnostics(ke, float(np.sqrt(v2.max())), contacts)


def system_energy(
    state: DemState,
    table: PairTable,
    surfaces: Sequence[ContactSurface],
    gravity: Any,
) -> EnergyBreakdown:
    """Kinetic, gravitational (zero at the origin) and stored contact energy."""
    p = state.particles
    n = len(p)
    ke = diagnostics(p).kinetic_energy
    pe = -float(np.sum(p.masses * dot(p.positions, np.asarray(gravity, dtype=np.float64))))

    elastic = 0.0
    i, j = neighbor_pairs(state.grid, p)
    if len(i):
        d = p.positions[j] - p.positions[i]
        overlap = p.radii[i] + p.radii[j] - norm(d)
        pair = table.effective(p.material_ids[i], p.material_ids[j],
                               p.radii[i], p.radii[j], p.masses[i], p.masses[j])
        spring, rolling = state.ledger.fetch(i * n + j)
        elastic += _stored(pair, overlap, spring, rolling)
    for surface in surfaces:
        sc, keys = _sorted_surface_contacts(surface, p, state.time)
        if not len(sc):
            continue
        pair = table.effective(p.material_ids[sc.particle], sc.material, p.radii[sc.particle],
                               sc.curvature, p.masses[sc.particle], np.full(len(sc), math.inf))
        spring, rolling = state.surface_ledger(surface.name).fetch(keys)
        elastic += _stored(pair, sc.overlap, spring, rolling)
    return EnergyBreakdown(ke, pe, elastic)


def _stored(pair: Any, overlap: FloatArray, spring: FloatArray, rolling: FloatArray) -> float:
    root = np.sqrt(pair.r_star * overlap)
    s_t = 8.0 * pair.g_star * root
    k_r = s_t * pair.r_star * pair.r_star
    energy = normal_elastic_energy(pair, overlap)
    energy = energy + 0.5 * s_t * dot(spring, spring) + 0.5 * dot(rolling, rolling) / k_r
    return float(np.sum(energy))


def fit_substep(dt_cpl: float, limit: float) -> float:
    """Largest step <= `limit` that divides `dt_cpl` into a whole number of substeps."""
    if not dt_cpl > 0:
        raise ConfigError("must be > 0", path="solver.dt_cpl")
    if not math.isfinite(limit):
        return dt_cpl
    return dt_cpl / max(1, math.ceil(dt_cpl / limit - 1e-9))
