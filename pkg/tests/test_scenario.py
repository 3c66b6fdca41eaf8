import math

import numpy as np
import pytest

from sinksim.coupling.shapes import ShapeSet
from sinksim.granular.materials import TOYOURA, MaterialTable
from sinksim.granular.particles import ParticleSet
from sinksim.mbd.gripper import GripperGeometry
from sinksim.mbd.profile import LoadProfile
from sinksim.scenario.bekker import bekker_fit, fit_power_law, palm_area
from sinksim.scenario.lunar import LUNAR_SCALE, curve_difference, lunar_compare
from sinksim.scenario.repose import ReposeSpec, fit_heap_angle, radial_profile
from sinksim.scenario.sandbox import (
    SandboxSpec,
    local_surface_height,
    mean_surface_height,
    surface_height_map,
)
from sinksim.scenario.sinkage import (
    RunRecord,
    Sample,
    place_gripper,
    pressure_sinkage_run,
)
from sinksim.scenario.sweep import SweepResult, build_jobs, slope_ratios, slope_sweep
from sinksim.utils.errors import ComparisonError, ConfigError, FitError


def _record(times, forces, axial, ref_t=None, ref_x=None):
    samples = [
        Sample(t, -f, 0.0, 0.0, -f, x, 0.0, 0.0, 0, 0) for t, f, x in zip(times, forces, axial)
    ]
    rec = RunRecord(samples=samples, reference_time=ref_t, reference_axial=ref_x)
    rec.finalize()
    return rec


# -- bekker ----------------------------------------------------------------

def test_power_law_recovers_synthetic_curve():
    area = palm_area(0.045)
    z = np.linspace(0.001, 0.02, 50)
    force = 1000.0 * z**1.1 * area
    fit = fit_power_law(z, force, area)
    assert fit.k == pytest.approx(1000.0, rel=1e-9)
    assert fit.n == pytest.approx(1.1, rel=1e-9)
    assert fit.residual < 1e-9
    assert not fit.degenerate


def test_constant_pressure_is_degenerate():
    z = np.linspace(0.001, 0.02, 20)
    fit = fit_power_law(z, np.full(20, 30.0), 0.01)
    assert fit.degenerate
    assert fit.to_dict()["degenerate"] is True


def test_power_law_needs_enough_points():
    with pytest.raises(FitError):
        fit_power_law([0.0, 0.001, 0.002], [1.0, 2.0, 3.0], 0.01)
    with pytest.raises(FitError):
        fit_power_law(np.full(10, 0.01), np.arange(1.0, 11.0), 0.01)
    with pytest.raises(FitError):
        fit_power_law([0.001] * 5, [1.0] * 5, 0.0)


def test_bekker_fit_uses_record_curve():
    t = np.linspace(0.0, 10.0, 101)
    force = np.linspace(5.0, 66.0, 101)
    z = (force / 1000.0) ** (1.0 / 1.2)
    rec = _record(t, force, -z, ref_t=0.0, ref_x=0.0)
    fit = bekker_fit(rec, 1.0)
    assert fit.points == 101
    assert fit.n == pytest.approx(1.2, rel=1e-6)


# -- comparison ------------------------------------------------------------

def test_identical_curves_have_zero_difference():
    f = np.linspace(5.0, 66.0, 50)
    z = f / 1000.0
    rep = curve_difference((f, z), (f, z))
    assert rep.mean_pct == 0.0
    assert rep.max_diff == 0.0


def test_relative_offset():
    f = np.linspace(5.0, 66.0, 50)
    rep = curve_difference((f, f / 1000.0), (f, 1.1 * f / 1000.0))
    assert rep.mean_pct == pytest.approx(10.0)
    assert rep.sd_pct == pytest.approx(0.0, abs=1e-9)
    assert rep.min_diff == pytest.approx(0.0005, rel=1e-9)


def test_disjoint_force_ranges():
    with pytest.raises(ComparisonError):
        curve_difference(([0.0, 1.0], [0.0, 0.1]), ([2.0, 3.0], [0.0, 0.1]))


def test_lunar_scale_maps_peak_load():
    assert 66.0 * LUNAR_SCALE == pytest.approx(10.90, abs=5e-3)
    t = np.linspace(0.0, 10.0, 41)
    earth = _record(t, np.linspace(5.0, 66.0, 41), -np.linspace(0.0, 0.02, 41), 0.0, 0.0)
    lunar = _record(t, np.linspace(5.0, 66.0, 41) * LUNAR_SCALE,
                    -np.linspace(0.0, 0.02, 41), 0.0, 0.0)
    rep = lunar_compare(earth, lunar)
    assert rep.force_high == pytest.approx(66.0 * LUNAR_SCALE)
    assert rep.max_diff == pytest.approx(0.0, abs=1e-12)


def test_report_table_layout():
    f = np.linspace(5.0, 66.0, 10)
    table = curve_difference((f, f / 1000.0), (f, f / 1000.0)).table()
    head, row = table.splitlines()
    assert head.split() == ["Mean", "(%)", "SD", "(%)", "Min", "(mm)", "Max", "(mm)"]
    assert len(row.split()) == 4


# -- records ---------------------------------------------------------------

def test_finalize_zeroes_sinkage_before_reference():
    rec = _record([0.0, 0.5, 1.0], [0.0, 5.0, 10.0], [0.0, -0.002, -0.005], 0.5, -0.002)
    assert rec.column("sinkage").tolist() == pytest.approx([0.0, 0.0, 0.003])
    force, z = rec.curve()
    assert force.tolist() == [5.0, 10.0]
    assert rec.final_sinkage == pytest.approx(0.003)
    assert rec.max_abs_sigma == 10.0


def test_record_without_reference():
    rec = _record([0.0, 0.1], [1.0, 2.0], [0.0, -0.001])
    assert rec.column("sinkage").tolist() == [0.0, 0.0]
    assert len(rec.curve()[0]) == 0
    assert rec.summary()["reference_time_s"] is None


# -- sandbox and repose ----------------------------------------------------

def test_sandbox_validation():
    with pytest.raises(ConfigError) as exc:
        SandboxSpec(fill_depth=0.1, particle_diameter=0.02).validate()
    assert exc.value.path == "sandbox.particle_diameter"
    assert SandboxSpec(particle_count=42).target_count() == 42


def test_surface_heights(tiny_bed):
    ps = tiny_bed.particles
    top = float(np.max(ps.positions[:, 2] + ps.radii))
    level = mean_surface_height(ps, 0.004, (0.15, 0.15, 0.10))
    assert 0.003 < level <= top
    assert local_surface_height(ps, (0.075, 0.075), 0.05) <= top
    assert local_surface_height(ps, (5.0, 5.0), 0.01) == 0.0
    h = surface_height_map(ps, 0.008, (0.15, 0.15))
    assert h.shape == (19, 19)


def test_heap_angle_of_a_cone():
    d = 0.004
    r = (np.arange(40) + 0.5) * d
    h = 0.06 - math.tan(math.radians(34.0)) * r
    h[h <= 0] = np.nan
    res = fit_heap_angle(r, h, d)
    assert res.angle_deg == pytest.approx(34.0, abs=1e-6)
    assert not res.degenerate


def test_flat_heap_is_degenerate():
    d = 0.004
    r = (np.arange(10) + 0.5) * d
    res = fit_heap_angle(r, np.full(10, d), d)
    assert res.degenerate


def test_radial_profile_takes_highest_top():
    table = MaterialTable([TOYOURA])
    ps = ParticleSet.create([[0.0, 0.0, 0.001], [0.0, 0.0, 0.005], [0.0045, 0.0, 0.001]],
                            0.001, 0, table)
    r, h = radial_profile(ps, (0.0, 0.0), 0.002)
    assert r.tolist() == pytest.approx([0.001, 0.003, 0.005])
    assert h[0] == pytest.approx(0.006)
    assert math.isnan(h[1])
    assert h[2] == pytest.approx(0.002)


def test_repose_spec_validation():
    with pytest.raises(ConfigError):
        ReposeSpec(cylinder_radius=0.005).validate()


# -- sinkage runs ----------------------------------------------------------

def test_gripper_placed_above_surface(tiny_bed, desk_config):
    profile = desk_config.profile()
    tree = place_gripper(tiny_bed, desk_config.gripper, profile, np.array([0.0, 0.0, -9.81]))
    shapes = ShapeSet([s for b in tree.bodies for s in b.shapes])
    st = tree.kinematics()
    surface = local_surface_height(tiny_bed.particles, (0.075, 0.075),
                                   0.5 * desk_config.gripper.footprint)
    assert shapes.lowest_point(st.rotations, st.positions) == pytest.approx(surface + 0.004)
    assert tree.body_count == 41


def test_zero_duration_run_records_nothing(tiny_bed, desk_config):
    profile = desk_config.profile(t4=0.5)
    record = pressure_sinkage_run(tiny_bed, desk_config.gripper, profile,
                                  np.array([0.0, 0.0, -9.81]), 1e-4)
    assert len(record) == 0
    assert record.metadata["particle_count"] == 1000
    assert record.metadata["substeps_per_window"] >= 1
    assert record.metadata["gripper_mass_kg"] == pytest.approx(1.5 * 0.16)


# -- sweeps ----------------------------------------------------------------

def _jobs():
    return build_jobs(SandboxSpec(), MaterialTable([TOYOURA]), GripperGeometry(), LoadProfile(),
                      [0, 25], [10, 60], 9.81, seed=7, dt_cpl=1e-4)


def test_jobs_cover_the_grid():
    jobs = _jobs()
    assert [(j.theta_deg, j.t4) for j in jobs] == [(0, 10), (0, 60), (25, 10), (25, 60)]
    assert [j.seed for j in jobs] == [7, 8, 9, 10]
    assert jobs[2].name == "theta25_t410_seed9"


def test_slope_ratios_against_flat_run():
    jobs = _jobs()

    def done(job, z):
        return SweepResult(job, _record([0.0, 1.0], [5.0, 66.0], [0.0, -z], 0.0, 0.0))

    results = [done(jobs[0], 0.010), SweepResult(jobs[1], None, "boom", 4),
               done(jobs[2], 0.017), done(jobs[3], 0.020)]
    rows = slope_ratios(results)
    assert rows[0]["ratio_to_flat"] == pytest.approx(1.0)
    assert rows[1]["ok"] is False and "ratio_to_flat" not in rows[1]
    assert rows[2]["ratio_to_flat"] == pytest.approx(1.7)
    # no successful flat run at t4 = 60
    assert rows[3]["ratio_to_flat"] is None
    assert rows[2]["bench_ratio_to_flat"] == pytest.approx(22.26 / 12.98)


def test_empty_sweep():
    assert slope_sweep([]) == []
