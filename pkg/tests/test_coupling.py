import math

import numpy as np
import pytest

from sinksim.coupling.cosim import CoSimulation, cosim_step
from sinksim.coupling.forces import WrenchAccumulator, particle_body_forces
from sinksim.coupling.shapes import BodyWindow, CollisionShape, ShapeSet, sphere_shape_contact
from sinksim.granular.contact import PairTable
from sinksim.granular.grid import SpatialGrid
from sinksim.granular.integrator import DemState
from sinksim.granular.ledger import ContactLedger
from sinksim.granular.materials import GRIPPER, TOYOURA, MaterialTable
from sinksim.granular.particles import ParticleSet
from sinksim.granular.vec import rotation_matrix
from sinksim.mbd.gripper import GripperGeometry, build_gripper
from sinksim.utils.errors import ConfigError

TABLE = MaterialTable([TOYOURA, GRIPPER])
PALM = CollisionShape("disc", 0.045, 1, half_height=0.008, rounding=0.003)
ROD = CollisionShape("capsule", 0.005, 1, start=(-0.02, 0, 0), end=(0.02, 0, 0))


def _window(bodies=1):
    return BodyWindow(0.0, np.tile(np.eye(3), (bodies, 1, 1)), np.zeros((bodies, 3)),
                      np.zeros((bodies, 3)), np.zeros((bodies, 3)))


def test_disc_face_contact():
    hit = sphere_shape_contact((0.0, 0.0, 0.0084), 5e-4, PALM)
    assert hit is not None
    assert hit.overlap == pytest.approx(1e-4)
    assert np.allclose(hit.normal, (0.0, 0.0, 1.0))
    assert math.isinf(hit.curvature)


def test_disc_rim_uses_rounding_radius():
    # diagonal off the rounded edge of the core cylinder
    corner = np.array([0.042, 0.0, 0.005])
    direction = np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0)
    hit = sphere_shape_contact(corner + direction * (0.003 + 4e-4), 5e-4, PALM)
    assert hit is not None
    assert hit.overlap == pytest.approx(1e-4)
    assert hit.curvature == pytest.approx(0.003)


def test_capsule_midpoint_contact():
    hit = sphere_shape_contact((0.0, 0.0, 0.0054), 5e-4, ROD)
    assert hit is not None
    assert hit.overlap == pytest.approx(1e-4)
    assert np.allclose(hit.normal, (0.0, 0.0, 1.0))
    assert hit.curvature == pytest.approx(0.005)
    assert np.allclose(hit.point, (0.0, 0.0, 0.00495))


def test_posed_capsule():
    turn = rotation_matrix((0.0, 0.0, 1.0), math.pi / 2)
    assert sphere_shape_contact((1.0, 0.015, 0.0054), 5e-4, ROD, turn, (1.0, 0.0, 0.0))
    assert sphere_shape_contact((1.015, 0.0, 0.0054), 5e-4, ROD, turn, (1.0, 0.0, 0.0)) is None


def test_separated_sphere_gives_none():
    assert sphere_shape_contact((0.0, 0.0, 0.02), 5e-4, ROD) is None


def test_bad_disc_rounding():
    with pytest.raises(ConfigError):
        CollisionShape("disc", 0.045, 1, half_height=0.008, rounding=0.01)


def test_no_particles_no_wrench():
    shapes = ShapeSet([PALM])
    shapes.set_window(_window())
    acc = WrenchAccumulator(1)
    particle_body_forces(ParticleSet.empty(TABLE), ContactLedger(), shapes, PairTable(TABLE),
                         acc, 0.0, 1e-6)
    forces, torques = acc.average()
    assert np.all(forces == 0.0) and np.all(torques == 0.0)


def test_body_reaction_is_opposite_to_particle_force():
    ps = ParticleSet.create([[0.0, 0.0, 0.0084]], 5e-4, 0, TABLE)
    shapes = ShapeSet([PALM])
    shapes.set_window(_window())
    acc = WrenchAccumulator(1)
    force, _, load = particle_body_forces(ps, ContactLedger(), shapes, PairTable(TABLE), acc,
                                          0.0, 1e-6)
    assert len(load) == 1
    assert force[0, 2] > 0
    assert np.allclose(acc.forces[0], -force[0], rtol=0, atol=1e-15)
    assert np.allclose(acc.torques[0], 0.0, atol=1e-15)


def test_window_extrapolates_linearly():
    w = BodyWindow(1.0, np.eye(3)[None], np.zeros((1, 3)), np.array([[0.0, 0.0, -2.0]]),
                   np.array([[0.0, 0.0, math.pi]]))
    rot, pos = w.at(1.5)
    assert np.allclose(pos[0], (0.0, 0.0, -1.0))
    assert np.allclose(rot[0], rotation_matrix((0.0, 0.0, 1.0), math.pi / 2))


def _sim(particles, load=None):
    tree = build_gripper(GripperGeometry(), material=1)
    tree.freeze()
    grid = SpatialGrid.for_particles(particles, (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    shapes = ShapeSet([s for b in tree.bodies for s in b.shapes])
    return CoSimulation(
        dem=DemState(particles, grid), tree=tree, table=PairTable(TABLE), boundaries=[],
        shapes=shapes, gravity=(0.0, 0.0, -9.81), load=load, dt_cpl=1e-4, dt_dem=2e-6,
    )


def test_empty_bed_step():
    sim = _sim(ParticleSet.empty(TABLE))
    report = cosim_step(sim)
    assert report.substeps == 50
    assert report.time == pytest.approx(1e-4)
    assert sim.dem.time == pytest.approx(1e-4)
    assert report.body_contacts == 0
    assert np.all(report.palm_force == 0.0)


def test_grain_lands_on_palm():
    ps = ParticleSet.create([[0.0, 0.0, 0.008 + 5e-4 + 1e-6]], 5e-4, 0, TABLE)
    sim = _sim(ps)
    for _ in range(40):
        report = cosim_step(sim)
    assert report.body_contacts == 1
    assert report.palm_force[2] < 0
    assert sim.tree.palm_axial() == 0.0
