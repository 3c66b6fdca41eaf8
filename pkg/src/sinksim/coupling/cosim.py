"""Staggered DEM/multibody stepping.

Within one coupling window the bodies move along straight lines (and constant
spin) from the poses sampled at the start of the window. The DEM runs all its
substeps against those moving shapes, and the averaged reactions then drive a
single multibody step.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ..granular.contact import ROLLING_DAMPING_RATIO, PairTable
from ..granular.integrator import DemState, dem_substep, diagnostics, substeps_per_window
from ..granular.parallel import SERIAL, ChunkRunner
from ..granular.surfaces import ContactSurface
from ..granular.vec import FloatArray
from ..mbd.tree import KinematicTree, LoadInput, mbd_step
from ..utils.errors import StabilityError, with_context
from .forces import WrenchAccumulator
from .shapes import BodyWindow, ShapeSet


class CouplingReport(NamedTuple):
    time: float
    substeps: int
    pair_contacts: int
    body_contacts: int
    clipping: int
    kinetic_energy: float
    palm_force: FloatArray


@dataclass
class CoSimulation:
    dem: DemState
    tree: KinematicTree
    table: PairTable
    boundaries: Sequence[ContactSurface]
    shapes: ShapeSet
    gravity: FloatArray
    load: LoadInput
    dt_cpl: float
    dt_dem: float
    runner: ChunkRunner = SERIAL
    mbd_substeps: int = 10
    rolling_damping: float = ROLLING_DAMPING_RATIO
    time: float = 0.0
    clipping: int = 0
    accumulator: WrenchAccumulator = field(init=False)

    def __post_init__(self) -> None:
        self.gravity = np.asarray(self.gravity, dtype=np.float64)
        self.substeps = substeps_per_window(self.dt_cpl, self.dt_dem)
        self.accumulator = WrenchAccumulator(len(self.tree.bodies))
        self.dem.time = self.time
        self.tree.time = self.time


def cosim_step(sim: CoSimulation) -> CouplingReport:
    """Advance DEM and tree together by one coupling step."""
    tree, dem, acc = sim.tree, sim.dem, sim.accumulator
    start = sim.time
    dem.time = start
    st = tree.kinematics()
    window = BodyWindow(start, st.rotations, st.positions, st.velocities, st.angular_velocities)
    sim.shapes.set_window(window)
    surfaces = [*sim.boundaries, sim.shapes]
    acc.clear()

    pair_contacts = 0
    for _ in range(sim.substeps):
        t = dem.time
        try:
            report = dem_substep(dem, sim.table, surfaces, sim.gravity, sim.dt_dem,
                                 runner=sim.runner, rolling_damping=sim.rolling_damping)
        except StabilityError as e:
            raise with_context(e, t, "dem") from e
        _, com = window.at(t)
        acc.add(report.surface_loads[sim.shapes.name], sim.shapes.bodies, com)
        pair_contacts = report.pair_contacts
    dem.time = start + sim.dt_cpl

    forces, torques = acc.average()
    try:
        mbd_step(tree, forces, torques, sim.load, start, sim.dt_cpl, substeps=sim.mbd_substeps)
    except StabilityError as e:
        raise with_context(e, start, "mbd") from e
    sim.time = start + sim.dt_cpl
    sim.clipping += acc.clipping
    return CouplingReport(
        time=sim.time,
        substeps=sim.substeps,
        pair_contacts=pair_contacts,
        body_contacts=acc.contacts,
        clipping=acc.clipping,
        kinetic_energy=diagnostics(dem.particles).kinetic_energy,
        palm_force=forces[tree.palm].copy(),
    )
