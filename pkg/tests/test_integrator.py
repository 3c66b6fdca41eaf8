import math

import numpy as np
import pytest

from sinksim.granular.contact import PairTable, rayleigh_dt
from sinksim.granular.grid import SpatialGrid
from sinksim.granular.integrator import (
    DemState,
    dem_substep,
    diagnostics,
    fit_substep,
    stable_dt,
    substeps_per_window,
)
from sinksim.granular.materials import TOYOURA, MaterialTable
from sinksim.granular.parallel import ChunkRunner
from sinksim.granular.particles import ParticleSet
from sinksim.utils.errors import ConfigError, TunnelingError

TABLE = MaterialTable([TOYOURA])
PAIRS = PairTable(TABLE)
R = 5e-4


def _state(positions, velocities=None, radius=R, extent=1.0):
    ps = ParticleSet.create(positions, radius, 0, TABLE, velocities=velocities)
    grid = SpatialGrid.for_particles(ps, (-extent,) * 3, (extent,) * 3)
    return DemState(ps, grid)


def test_free_fall_matches_ballistic_drop():
    state = _state([[0.0, 0.0, 0.0]])
    dt = 1e-4
    for _ in range(1000):
        dem_substep(state, PAIRS, [], (0.0, 0.0, -9.81), dt)
    t = 1000 * dt
    assert state.time == pytest.approx(t)
    assert state.particles.positions[0, 2] == pytest.approx(-0.5 * 9.81 * t * t, rel=0.01)


def _head_on():
    gap = 1e-5
    x = R + gap / 2
    return _state([[-x, 0.0, 0.0], [x, 0.0, 0.0]],
                  velocities=[[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]], extent=0.01)


def _collide(state):
    for _ in range(400):
        dem_substep(state, PAIRS, [], (0.0, 0.0, 0.0), 1e-6)
    p = state.particles.positions
    assert np.linalg.norm(p[1] - p[0]) > 2 * R


def test_head_on_restitution():
    state = _head_on()
    _collide(state)
    v = state.particles.velocities
    ratio = (v[1, 0] - v[0, 0]) / 1.0
    assert ratio == pytest.approx(0.30, abs=0.05)
    assert len(state.ledger) == 0


def test_head_on_conserves_momentum():
    state = _head_on()
    ps = state.particles
    before = (ps.masses[:, None] * ps.velocities).sum(axis=0)
    scale = float(np.abs(ps.masses[:, None] * ps.velocities).sum())
    _collide(state)
    after = (ps.masses[:, None] * ps.velocities).sum(axis=0)
    assert np.all(np.abs(after - before) <= 1e-10 * scale)


def test_kinetic_energy_of_single_particle():
    ps = ParticleSet.create([[0.0, 0.0, 0.0]], R, 0, TABLE, velocities=[[1.0, 0.0, 0.0]])
    assert diagnostics(ps).kinetic_energy == pytest.approx(6.94e-7, rel=1e-3)
    assert diagnostics(ps).max_speed == pytest.approx(1.0)


def test_substeps_per_window():
    assert substeps_per_window(0.01, 1e-5) == 1000
    with pytest.raises(ConfigError):
        substeps_per_window(1e-4, 3e-5)
    with pytest.raises(ConfigError):
        substeps_per_window(0.0, 1e-5)


def test_fit_substep():
    assert fit_substep(1e-4, 3e-5) == pytest.approx(2.5e-5)
    assert fit_substep(1e-4, 1e-3) == pytest.approx(1e-4)
    assert fit_substep(1e-4, math.inf) == 1e-4
    dt = fit_substep(1e-4, 3.9e-6)
    assert dt <= 3.9e-6
    assert substeps_per_window(1e-4, dt) == 26


def test_stable_dt_uses_smallest_radius():
    ps = ParticleSet.create([[0, 0, 0], [0.01, 0, 0]], [R, 2 * R], 0, TABLE)
    assert stable_dt(TABLE, ps, 0.2) == pytest.approx(rayleigh_dt(TOYOURA, R, 0.2))


def _cloud(seed=5):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-0.004, 0.004, size=(300, 3))
    return _state(pos, extent=0.01)


def test_thread_count_does_not_change_results():
    serial, threaded = _cloud(), _cloud()
    runner = ChunkRunner(threads=4, chunk=16)
    try:
        for _ in range(3):
            a = dem_substep(serial, PAIRS, [], (0.0, 0.0, -9.81), 1e-8)
            b = dem_substep(threaded, PAIRS, [], (0.0, 0.0, -9.81), 1e-8, runner=runner)
            assert a.pair_contacts == b.pair_contacts > 0
    finally:
        runner.close()
    for name in ("positions", "velocities", "angular_velocities"):
        assert np.array_equal(getattr(serial.particles, name), getattr(threaded.particles, name))
    assert np.array_equal(serial.ledger.keys, threaded.ledger.keys)


def test_internal_forces_cancel():
    report = dem_substep(_cloud(), PAIRS, [], (0.0, 0.0, 0.0), 1e-8)
    assert report.internal_force_scale > 0
    assert np.all(np.abs(report.internal_force_sum) <= 1e-9 * report.internal_force_scale)


def test_ledger_only_holds_overlapping_pairs():
    state = _cloud()
    for _ in range(5):
        dem_substep(state, PAIRS, [], (0.0, 0.0, -9.81), 1e-8)
        p = state.particles
        keys = state.ledger.keys
        assert len(keys) > 0
        i, j = keys // len(p), keys % len(p)
        gap = np.linalg.norm(p.positions[j] - p.positions[i], axis=1) - p.radii[i] - p.radii[j]
        assert np.all(gap < 0.0)


def test_tunneling_is_rejected():
    state = _state([[0.0, 0.0, 0.0]], velocities=[[0.0, 0.0, -10.0]])
    with pytest.raises(TunnelingError):
        dem_substep(state, PAIRS, [], (0.0, 0.0, 0.0), 1e-4)
