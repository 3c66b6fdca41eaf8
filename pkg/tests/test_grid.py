import numpy as np
import pytest

from sinksim.granular.grid import SpatialGrid, brute_force_pairs, neighbor_pairs
from sinksim.granular.materials import TOYOURA, MaterialTable
from sinksim.granular.particles import ParticleSet
from sinksim.utils.errors import DomainEscapeError

TABLE = MaterialTable([TOYOURA])


def _particles(positions, radius=5e-4):
    return ParticleSet.create(positions, radius, 0, TABLE)


def _grid(particles):
    return SpatialGrid.for_particles(particles, (-0.05, -0.05, -0.05), (0.05, 0.05, 0.05))


def test_touching_pair_found():
    ps = _particles([[0.0, 0.0, 0.0], [0.0009, 0.0, 0.0]])
    i, j = neighbor_pairs(_grid(ps), ps)
    assert list(zip(i.tolist(), j.tolist())) == [(0, 1)]


def test_distant_pair_not_found():
    ps = _particles([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0]])
    i, _ = neighbor_pairs(_grid(ps), ps)
    assert len(i) == 0


def test_matches_brute_force_on_random_cloud():
    rng = np.random.default_rng(11)
    pos = rng.uniform(-0.005, 0.005, size=(500, 3))
    radii = rng.uniform(3e-4, 6e-4, size=500)
    ps = ParticleSet.create(pos, radii, 0, TABLE)
    gi, gj = neighbor_pairs(_grid(ps), ps)
    bi, bj = brute_force_pairs(ps)
    assert len(bi) > 0
    assert set(zip(gi.tolist(), gj.tolist())) == set(zip(bi.tolist(), bj.tolist()))
    # canonical order: i < j, ascending i * n + j
    keys = gi * len(ps) + gj
    assert np.all(gi < gj)
    assert np.all(np.diff(keys) > 0)


def test_skin_delays_rebuild():
    ps = _particles([[0.0, 0.0, 0.0], [0.002, 0.0, 0.0]])
    grid = _grid(ps)
    neighbor_pairs(grid, ps)
    assert grid.rebuilds == 1
    ps.positions[0, 0] += 0.25 * grid.skin
    neighbor_pairs(grid, ps)
    assert grid.rebuilds == 1
    ps.positions[0, 0] += 0.5 * grid.skin
    neighbor_pairs(grid, ps)
    assert grid.rebuilds == 2


def test_escape_is_reported():
    ps = _particles([[0.0, 0.0, 0.0], [0.2, 0.0, 0.0]])
    with pytest.raises(DomainEscapeError):
        neighbor_pairs(_grid(ps), ps)
