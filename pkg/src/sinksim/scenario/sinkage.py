"""Pressure-sinkage protocol.

The gripper is lowered onto the bed under the load schedule. Its palm
position along the load axis at the first instant the net push reaches the
preload is the zero of the sinkage curve.
"""
from __future__ import annotations
import math
import time as wallclock
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional

import numpy as np

from ..coupling.cosim import CoSimulation, cosim_step
from ..coupling.shapes import ShapeSet
from ..granular.contact import PairTable
from ..granular.integrator import fit_substep, stable_dt
from ..granular.parallel import SERIAL, ChunkRunner
from ..granular.vec import FloatArray
from ..mbd.gripper import GripperGeometry, build_gripper
from ..mbd.profile import LoadProfile
from ..mbd.tree import KinematicTree
from ..utils.errors import StabilityError
from .sandbox import SettledBed, local_surface_height

CSV_COLUMNS = (
    "t_s", "sigma_N", "load_x_N", "load_y_N", "load_z_N", "palm_axial_m", "sinkage_m",
    "kinetic_energy_J", "body_contacts", "clipping_warnings",
)

# Bench maximal sinkage at 66 N per slope angle (degrees -> mm), full-scale gripper.
REFERENCE_SINKAGE_MM: dict[int, float] = {
    0: 12.98, 5: 13.23, 10: 14.26, 15: 15.23, 20: 17.31, 25: 22.26, 30: 30.05, 35: 36.19,
}


class Sample(NamedTuple):
    t: float
    sigma: float
    load_x: float
    load_y: float
    load_z: float
    palm_axial: float
    sinkage: float
    kinetic_energy: float
    body_contacts: int
    clipping: int


@dataclass
class RunRecord:
    samples: list[Sample] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    reference_time: Optional[float] = None
    reference_axial: Optional[float] = None
    clipping: int = 0
    max_violation: float = 0.0
    truncated: Optional[str] = None

    def __len__(self) -> int:
        return len(self.samples)

    def column(self, name: str) -> FloatArray:
        return np.array([getattr(s, name) for s in self.samples], dtype=np.float64)

    def finalize(self) -> None:
        """Fill the sinkage column: reference minus axial from the reference on, 0 before."""
        if self.reference_axial is None or self.reference_time is None:
            self.samples = [s._replace(sinkage=0.0) for s in self.samples]
            return
        ref_t, ref_x = self.reference_time, self.reference_axial
        self.samples = [
            s._replace(sinkage=(ref_x - s.palm_axial) if s.t >= ref_t - 1e-12 else 0.0)
            for s in self.samples
        ]

    @property
    def final_sinkage(self) -> float:
        return self.samples[-1].sinkage if self.samples else 0.0

    @property
    def max_abs_sigma(self) -> float:
        return float(np.max(np.abs(self.column("sigma")))) if self.samples else 0.0

    def curve(self) -> tuple[FloatArray, FloatArray]:
        """(|sigma|, sinkage) from the reference crossing on."""
        if not self.samples:
            return np.zeros(0), np.zeros(0)
        t = self.column("t")
        start = self.reference_time if self.reference_time is not None else math.inf
        keep = t >= start - 1e-12
        return np.abs(self.column("sigma"))[keep], self.column("sinkage")[keep]

    def summary(self) -> dict[str, Any]:
        return {
            "samples": len(self),
            "final_sinkage_m": self.final_sinkage,
            "max_abs_sigma_N": self.max_abs_sigma,
            "reference_time_s": self.reference_time,
            "reference_axial_m": self.reference_axial,
            "clipping_warnings": self.clipping,
            "max_limit_violation": self.max_violation,
            "truncated": self.truncated,
            **self.metadata,
        }


def place_gripper(
    bed: SettledBed,
    geometry: GripperGeometry,
    profile: LoadProfile,
    gravity: FloatArray,
    clearance: Optional[float] = None,
) -> KinematicTree:
    """Gripper tree over the middle of the box with its lowest point `clearance` above the sand."""
    lx, ly, _ = bed.box.dimensions
    material = bed.materials.index("gripper")
    clearance = bed.spec.particle_diameter if clearance is None else clearance
    centre = (0.5 * lx, 0.5 * ly)
    probe = build_gripper(geometry, material, (centre[0], centre[1], 0.0),
                          rail_axis=profile.axis(), gravity=gravity)
    shapes = ShapeSet([s for b in probe.bodies for s in b.shapes])
    st = probe.kinematics()
    lowest = shapes.lowest_point(st.rotations, st.positions)
    surface = local_surface_height(bed.particles, centre, 0.5 * geometry.footprint)
    lift = surface + clearance - lowest
    return build_gripper(geometry, material, (centre[0], centre[1], lift),
                         rail_axis=profile.axis(), gravity=gravity)


def pressure_sinkage_run(
    bed: SettledBed,
    geometry: GripperGeometry,
    profile: LoadProfile,
    gravity: Any,
    dt_cpl: float,
    sample_rate: float = 100.0,
    safety_fraction: float = 0.2,
    runner: ChunkRunner = SERIAL,
    metadata: Optional[dict[str, Any]] = None,
    on_progress: Optional[Callable[[Sample], None]] = None,
    mbd_substeps: int = 10,
) -> RunRecord:
    """Load the gripper into `bed` over [0, t4] and record the sinkage curve.

    The bed is copied; `bed` itself is left untouched. On a numerical fault the
    samples recorded so far are attached to the error as `partial_record`.
    """
    g = np.asarray(gravity, dtype=np.float64)
    state = bed.state.copy()
    table = PairTable(bed.materials)
    dt_dem = fit_substep(dt_cpl, stable_dt(bed.materials, state.particles, safety_fraction))
    tree = place_gripper(bed, geometry, profile, g)
    shapes = ShapeSet([s for b in tree.bodies for s in b.shapes])

    record = RunRecord(metadata={
        "theta_deg": math.degrees(profile.theta),
        "gravity": g.tolist(),
        "gravity_magnitude": float(np.linalg.norm(g)),
        "material": bed.spec.material,
        "seed": bed.seed,
        "particle_count": len(state.particles),
        "dt_cpl_s": dt_cpl,
        "dt_dem_s": dt_dem,
        "substeps_per_window": int(round(dt_cpl / dt_dem)),
        "gripper_mass_kg": tree.total_mass,
        "load": profile.to_dict(),
        **(metadata or {}),
    })
    if profile.holds is None and profile.t4 <= profile.t3:
        return record

    sim = CoSimulation(
        dem=state, tree=tree, table=table, boundaries=[bed.box], shapes=shapes,
        gravity=g, load=profile.load, dt_cpl=dt_cpl, dt_dem=dt_dem, runner=runner,
        mbd_substeps=mbd_substeps,
    )
    steps = int(round(profile.end_time / dt_cpl))
    sample_every = max(1, int(round(1.0 / (sample_rate * dt_cpl))))
    progress_every = max(1, int(round(1.0 / dt_cpl)))
    started = wallclock.perf_counter()

    def sample(t: float, contacts: int, clipping: int, ke: float) -> Sample:
        load = profile.load(t)
        return Sample(t, profile.sigma(t), float(load[0]), float(load[1]), float(load[2]),
                      tree.palm_axial(), 0.0, ke, contacts, clipping)

    record.samples.append(sample(0.0, 0, 0, 0.0))
    try:
        for k in range(1, steps + 1):
            sim.time = (k - 1) * dt_cpl
            rep = cosim_step(sim)
            t = k * dt_cpl
            if record.reference_time is None and t >= profile.t2 - 1e-12:
                record.reference_time = t
                record.reference_axial = tree.palm_axial()
            if k % sample_every == 0 or k == steps:
                s = sample(t, rep.body_contacts, rep.clipping, rep.kinetic_energy)
                record.samples.append(s)
                if on_progress is not None and k % progress_every == 0:
                    on_progress(s)
    except StabilityError as e:
        record.clipping = sim.clipping
        record.max_violation = tree.max_violation
        record.truncated = str(e)
        record.finalize()
        e.partial_record = record
        raise
    record.clipping = sim.clipping
    record.max_violation = tree.max_violation
    record.metadata["wall_clock_s"] = wallclock.perf_counter() - started
    record.finalize()
    return record
