import math
from dataclasses import replace

import numpy as np
import pytest

from sinksim.granular.contact import (
    UNBOUNDED,
    PairTable,
    damping_beta,
    effective_pair_params,
    hertz_mindlin_force,
    normal_elastic_energy,
    rayleigh_dt,
    rolling_resistance_update,
)
from sinksim.granular.materials import TOYOURA, MaterialTable
from sinksim.utils.errors import InvalidMaterialError

R = 5e-4
MASS = TOYOURA.density * 4.0 / 3.0 * math.pi * R**3


def _pair():
    return effective_pair_params(TOYOURA, TOYOURA, R, R, MASS, MASS)


def test_effective_params_for_equal_particles():
    pair = _pair()
    assert pair.r_star == pytest.approx(2.5e-4)
    assert pair.m_star == pytest.approx(0.5 * MASS)
    assert pair.e_star == pytest.approx(2.6667e7, rel=1e-4)


def test_wall_partner_drops_out_of_harmonic_means():
    pair = effective_pair_params(TOYOURA, TOYOURA, R, UNBOUNDED, MASS, UNBOUNDED)
    assert pair.r_star == pytest.approx(R)
    assert pair.m_star == pytest.approx(MASS)


def test_zero_radius_is_rejected():
    with pytest.raises(InvalidMaterialError):
        effective_pair_params(TOYOURA, TOYOURA, 0.0, R, MASS, MASS)


def test_damping_beta():
    assert damping_beta(0.3) == pytest.approx(-0.3579, abs=1e-4)
    assert damping_beta(1.0) == 0.0


def test_pair_table_matches_scalar_constants():
    table = PairTable(MaterialTable([TOYOURA]))
    vec = table.effective([0], [0], [R], [R], [MASS], [MASS])
    one = _pair()
    for name in ("e_star", "g_star", "r_star", "m_star", "beta", "mu_s", "mu_r"):
        assert float(np.asarray(getattr(vec, name))[0]) == pytest.approx(getattr(one, name))


def test_hertz_normal_force_at_rest():
    pair = _pair()
    out = hertz_mindlin_force(pair, 1e-5, np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3),
                              1e-6)
    assert float(out.normal_magnitude) == pytest.approx(1.778e-2, rel=1e-3)
    # pushes i away from j
    assert out.normal_force[2] == pytest.approx(-1.778e-2, rel=1e-3)
    assert np.allclose(out.tangential_force, 0.0)


def test_elastic_restitution_has_no_damping():
    elastic = replace(_pair(), beta=0.0)
    n = np.array([0.0, 0.0, 1.0])
    still = hertz_mindlin_force(elastic, 1e-5, n, np.zeros(3), np.zeros(3), 1e-6)
    moving = hertz_mindlin_force(elastic, 1e-5, n, np.array([0.0, 0.0, 0.3]), np.zeros(3), 1e-6)
    assert float(moving.normal_magnitude) == pytest.approx(float(still.normal_magnitude))


def test_coulomb_cap_and_spring_rescale():
    pair = _pair()
    n = np.array([0.0, 0.0, 1.0])
    out = hertz_mindlin_force(pair, 1e-5, n, np.zeros(3), np.array([1e-3, 0.0, 0.0]), 1e-6)
    cap = pair.mu_s * abs(float(out.normal_magnitude))
    assert bool(out.sliding)
    assert float(np.linalg.norm(out.tangential_force)) == pytest.approx(cap)
    s_t = 8.0 * pair.g_star * math.sqrt(pair.r_star * 1e-5)
    assert float(np.linalg.norm(out.spring)) * s_t == pytest.approx(cap)


def test_non_overlapping_contacts_are_refused():
    with pytest.raises(ValueError):
        hertz_mindlin_force(_pair(), 0.0, np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3),
                            1e-6)


def test_spring_follows_rotated_normal():
    pair = _pair()
    a = math.radians(20.0)
    n = np.array([0.0, math.sin(a), math.cos(a)])
    stored = np.array([2e-7, 1e-7, 0.0])  # tangent to the previous normal (0, 0, 1)
    out = hertz_mindlin_force(pair, 1e-5, n, np.array([0.01, -0.02, 0.005]), stored, 1e-6)
    assert abs(float(out.spring @ n)) <= 1e-12 * float(np.linalg.norm(out.spring))
    assert abs(float(out.tangential_force @ n)) <= 1e-12 * float(
        np.linalg.norm(out.tangential_force))


def test_separating_contact_keeps_damping_term():
    pair = _pair()
    n = np.array([0.0, 0.0, 1.0])
    out = hertz_mindlin_force(pair, 1e-5, n, np.array([0.0, 0.0, -5.0]), np.zeros(3), 1e-6)
    assert float(out.normal_magnitude) < 0.0
    assert out.normal_force[2] > 0.0


def test_rolling_zero_input_gives_zero_torque():
    out = rolling_resistance_update(_pair(), 1e-5, np.array([0.0, 0.0, 1.0]), np.zeros(3),
                                    1.778e-2, 1e-6, np.zeros(3))
    assert np.allclose(out.torque, 0.0)


def test_rolling_torque_is_capped_and_dissipative():
    pair = _pair()
    n = np.array([0.0, 0.0, 1.0])
    dtheta = np.array([1e-2, 0.0, 0.0])
    out = rolling_resistance_update(pair, 1e-5, n, dtheta, 1.778e-2, 1e-6, np.zeros(3))
    limit = TOYOURA.rolling_friction * 2.5e-4 * 1.778e-2
    assert limit == pytest.approx(6.67e-7, rel=1e-2)
    assert float(np.linalg.norm(out.torque)) <= limit * (1 + 1e-12)
    assert float(out.torque @ dtheta) <= 0.0


def test_rayleigh_dt():
    dt = rayleigh_dt(TOYOURA, 5e-4, 1.0)
    assert dt == pytest.approx(1.97e-5, rel=5e-3)
    assert rayleigh_dt(TOYOURA, 1e-3, 1.0) == pytest.approx(2.0 * dt)
    dense = replace(TOYOURA, density=4.0 * TOYOURA.density)
    assert rayleigh_dt(dense, 5e-4, 1.0) == pytest.approx(2.0 * dt)


def test_normal_energy_matches_force_integral():
    pair = _pair()
    d = 1e-5
    h = 1e-9
    f = (normal_elastic_energy(pair, d + h) - normal_elastic_energy(pair, d - h)) / (2 * h)
    assert float(f) == pytest.approx((4.0 / 3.0) * pair.e_star * math.sqrt(pair.r_star) * d**1.5,
                                     rel=1e-4)
