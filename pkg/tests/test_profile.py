import math

import numpy as np
import pytest

from sinksim.mbd.profile import (
    HoldSchedule,
    LoadProfile,
    gravity_vector,
    load_vector,
    sigma_load,
    step_interp,
)
from sinksim.utils.errors import ConfigError

MG = 1.5 * 9.81


def test_step_interp_clamps_and_blends():
    assert step_interp(-1.0, 0.0, 5.0, 1.0, 10.0) == 5.0
    assert step_interp(0.5, 0.0, 0.0, 1.0, 1.0) == pytest.approx(0.5)
    assert step_interp(2.0, 0.0, 0.0, 1.0, 1.0) == 1.0


def test_step_interp_has_flat_ends():
    h = 1e-7
    for t in (0.0, 1.0):
        slope = (step_interp(t + h, 0, 0, 1, 1) - step_interp(t - h, 0, 0, 1, 1)) / (2 * h)
        assert abs(slope) < 1e-5


def test_step_interp_rejects_reversed_interval():
    with pytest.raises(ConfigError):
        step_interp(0.5, 1.0, 0.0, 0.0, 1.0)


def test_sigma_at_schedule_points():
    profile = LoadProfile(mg=MG)
    assert sigma_load(0.0, profile) == pytest.approx(MG, abs=1e-12)
    assert sigma_load(0.5, profile) == pytest.approx(-5.0, abs=1e-12)
    assert sigma_load(10.0, profile) == pytest.approx(-66.0, abs=1e-12)
    assert profile.peak == pytest.approx(66.0)


def test_sigma_rejects_negative_time():
    with pytest.raises(ValueError):
        sigma_load(-0.1, LoadProfile())


def test_sloped_load_vector():
    profile = LoadProfile(theta=math.radians(35.0), mg=MG)
    vec = load_vector(10.0, profile)
    assert vec == pytest.approx(np.array([-37.856, 0.0, -54.064]), abs=1e-3)


def test_gravity_vector_tilts_with_slope():
    g = gravity_vector(9.81, math.radians(35.0))
    assert np.linalg.norm(g) == pytest.approx(9.81)
    assert g[0] < 0 and g[2] < 0


def test_timing_is_validated():
    with pytest.raises(ConfigError):
        LoadProfile(t1=1.0, t2=0.5)
    with pytest.raises(ConfigError):
        LoadProfile(t4=0.2)
    with pytest.raises(ConfigError):
        LoadProfile(preload=0.0)


def test_hold_schedule_steps():
    assert HoldSchedule().steps(61.0) == [5.0] * 12 + [pytest.approx(1.0)]
    assert HoldSchedule(increment=10.0).steps(30.0) == [10.0, 10.0, 10.0]


def test_discrete_holds_reach_the_same_peak():
    profile = LoadProfile(mg=MG, holds=HoldSchedule())
    # 13 ramps of 0.5 s with 12 holds of 5 s between them
    assert profile.end_time == pytest.approx(0.5 + 13 * 0.5 + 12 * 5.0)
    assert profile.sigma(profile.end_time) == pytest.approx(-66.0)
    # flat during the first hold
    assert profile.sigma(1.5) == pytest.approx(-10.0)
    assert profile.sigma(5.0) == pytest.approx(-10.0)


def test_gravity_scaling():
    moon = LoadProfile(mg=MG).scaled(1.62 / 9.81)
    assert moon.peak == pytest.approx(66.0 * 1.62 / 9.81)


def test_to_dict_reports_degrees():
    out = LoadProfile(theta=math.radians(25.0)).to_dict()
    assert out["theta_deg"] == pytest.approx(25.0)
    assert "_stages" not in out
