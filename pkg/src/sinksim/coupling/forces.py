"""Particle-to-body force exchange."""
from __future__ import annotations
from typing import Optional

import numpy as np

from ..granular.contact import ROLLING_DAMPING_RATIO, PairTable
from ..granular.integrator import SurfaceLoad, surface_contact_forces
from ..granular.ledger import ContactLedger
from ..granular.parallel import ChunkRunner
from ..granular.particles import ParticleSet
from ..granular.vec import FloatArray, IntArray, cross, scatter_add
from .shapes import ShapeSet


class WrenchAccumulator:
    """Sums contact reactions per body over the substeps of one coupling window.

    Torques are about each body's centre of mass at the time of the substep.
    """

    def __init__(self, bodies: int) -> None:
        self.forces = np.zeros((bodies, 3))
        self.torques = np.zeros((bodies, 3))
        self.substeps = 0
        self.clipping = 0
        self.contacts = 0

    def add(self, load: SurfaceLoad, shape_bodies: IntArray, com: FloatArray) -> None:
        n = len(self.forces)
        body = shape_bodies[load.element]
        arm = load.point - com[body]
        self.forces += scatter_add(body, load.force, n)
        self.torques += scatter_add(body, cross(arm, load.force) + load.couple, n)
        self.substeps += 1
        self.clipping += load.clipping
        self.contacts = len(load)

    def average(self) -> tuple[FloatArray, FloatArray]:
        if self.substeps == 0:
            return np.zeros_like(self.forces), np.zeros_like(self.torques)
        return self.forces / self.substeps, self.torques / self.substeps

    def clear(self) -> None:
        self.forces[:] = 0.0
        self.torques[:] = 0.0
        self.substeps = 0
        self.clipping = 0
        self.contacts = 0


def particle_body_forces(
    particles: ParticleSet,
    ledger: ContactLedger,
    shapes: ShapeSet,
    table: PairTable,
    accumulator: WrenchAccumulator,
    time: float,
    dt: float,
    step: int = 0,
    runner: Optional[ChunkRunner] = None,
    rolling_damping: float = ROLLING_DAMPING_RATIO,
) -> tuple[FloatArray, FloatArray, SurfaceLoad]:
    """Forces/torques on particles from every gripper shape; reactions go to `accumulator`.

    `shapes` must have its body window set.
    """
    if shapes.window is None:
        raise ValueError("shape set has no body window")
    force, torque, load = surface_contact_forces(
        particles, shapes, ledger, table, time, dt,
        step=step, runner=runner, rolling_damping=rolling_damping,
    )
    _, com = shapes.window.at(time)
    accumulator.add(load, shapes.bodies, com)
    return force, torque, load
