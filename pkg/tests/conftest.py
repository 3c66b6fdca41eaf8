from pathlib import Path

import numpy as np
import pytest

from sinksim.granular.grid import SpatialGrid
from sinksim.granular.integrator import DemState
from sinksim.granular.particles import ParticleSet
from sinksim.granular.surfaces import BoxBoundary
from sinksim.scenario.sandbox import SandboxSpec, SettledBed, bed_domain, lattice_positions
from sinksim.utils.config import parse_config


@pytest.fixture
def desk_config():
    return parse_config({"schema_version": 1})


@pytest.fixture
def tiny_bed(desk_config):
    """One loose lattice layer on the floor of a desk-sized box; no settling needed."""
    materials = desk_config.scaled_materials()
    spec = SandboxSpec(box=(0.15, 0.15, 0.10), fill_depth=0.04, particle_diameter=0.004,
                       particle_count=1000)
    positions = lattice_positions(spec, spec.target_count(), np.random.default_rng(3))
    particles = ParticleSet.create(positions, spec.radius, materials.index("toyoura"), materials)
    lower, upper = bed_domain(spec, float(positions[:, 2].max()))
    state = DemState(particles, SpatialGrid.for_particles(particles, lower, upper))
    return SettledBed(
        state=state,
        box=BoxBoundary(spec.box, materials.index("wall")),
        materials=materials,
        spec=spec,
        seed=3,
        dt_dem=1e-5,
        actual_depth=spec.particle_diameter,
    )


@pytest.fixture
def write_file(tmp_path: Path):
    def _write(name: str, body: str) -> Path:
        p = tmp_path / name
        p.write_text(body, encoding="utf-8")
        return p
    return _write
