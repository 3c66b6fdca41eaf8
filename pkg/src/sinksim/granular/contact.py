"""Hertz-Mindlin normal/tangential contact with a type C rolling spring.

Every function here works row-wise on numpy arrays so the same code path serves
a single pair (0-d overlap, shape (3,) vectors) and a whole contact list.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

import numpy as np

from ..utils.errors import IntegrationFault, InvalidMaterialError
from .materials import MaterialParams, MaterialTable, PairCoefficients, default_coefficients
from .vec import FloatArray, dot, norm, tangential

# Radius/mass of walls and shapes: 1/inf == 0 drops them from the harmonic sums.
UNBOUNDED = math.inf

ROLLING_DAMPING_RATIO = 0.3
_DAMP = 2.0 * math.sqrt(5.0 / 6.0)


def damping_beta(restitution: Any) -> Any:
    """ln e / sqrt(ln^2 e + pi^2); 0 at e = 1, negative below."""
    ln_e = np.log(restitution)
    return ln_e / np.sqrt(ln_e * ln_e + math.pi * math.pi)


def _harmonic(a: Any, b: Any) -> Any:
    return 1.0 / (1.0 / np.asarray(a, dtype=np.float64) + 1.0 / np.asarray(b, dtype=np.float64))


@dataclass(frozen=True)
class EffectivePair:
    """Combined constants for one contact (floats) or for many (arrays)."""

    e_star: Any
    g_star: Any
    r_star: Any
    m_star: Any
    beta: Any
    mu_s: Any
    mu_r: Any
    # harmonic mean of the partners' rolling inertias (I + m r^2)
    rolling_inertia: Any

    def take(self, idx: Any) -> EffectivePair:
        return EffectivePair(*(np.asarray(getattr(self, f))[idx] for f in _PAIR_FIELDS))


_PAIR_FIELDS = ("e_star", "g_star", "r_star", "m_star", "beta", "mu_s", "mu_r", "rolling_inertia")


def effective_pair_params(
    mat_i: MaterialParams,
    mat_j: MaterialParams,
    r_i: float,
    r_j: float,
    m_i: float,
    m_j: float,
    coefficients: Optional[PairCoefficients] = None,
) -> EffectivePair:
    """Starred constants for a pair; pass UNBOUNDED for a wall's radius and mass."""
    if coefficients is None:
        coefficients = default_coefficients(mat_i, mat_j)
    e_star = 1.0 / ((1 - mat_i.poisson_ratio**2) / mat_i.young_modulus
                    + (1 - mat_j.poisson_ratio**2) / mat_j.young_modulus)
    g_star = 1.0 / ((2 - mat_i.poisson_ratio) / mat_i.shear_modulus
                    + (2 - mat_j.poisson_ratio) / mat_j.shear_modulus)
    r_star = float(_harmonic(r_i, r_j))
    m_star = float(_harmonic(m_i, m_j))
    i_r = float(_harmonic(1.4 * m_i * r_i * r_i, 1.4 * m_j * r_j * r_j))
    pair = EffectivePair(
        e_star=e_star, g_star=g_star, r_star=r_star, m_star=m_star,
        beta=float(damping_beta(coefficients.restitution)),
        mu_s=coefficients.static_friction, mu_r=coefficients.rolling_friction,
        rolling_inertia=i_r,
    )
    for name in ("e_star", "g_star", "r_star", "m_star", "rolling_inertia"):
        value = getattr(pair, name)
        if not (math.isfinite(value) and value > 0):
            raise InvalidMaterialError(
                f"non-finite or non-positive {name}={value!r} for pair "
                f"('{mat_i.name}', '{mat_j.name}')"
            )
    return pair


class PairTable:
    """Per-material-pair constants as matrices, evaluated for many contacts at once."""

    def __init__(self, table: MaterialTable) -> None:
        n = len(table)
        self.table = table
        self.inv_e = np.array([(1 - m.poisson_ratio**2) / m.young_modulus for m in table.materials])
        self.inv_g = np.array([(2 - m.poisson_ratio) / m.shear_modulus for m in table.materials])
        self.beta = np.zeros((n, n))
        self.mu_s = np.zeros((n, n))
        self.mu_r = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                c = table.pair(i, j)
                self.beta[i, j] = damping_beta(c.restitution)
                self.mu_s[i, j] = c.static_friction
                self.mu_r[i, j] = c.rolling_friction
        self.max_young = max(m.young_modulus for m in table.materials)

    def effective(
        self, mat_i: Any, mat_j: Any, r_i: Any, r_j: Any, m_i: Any, m_j: Any
    ) -> EffectivePair:
        mat_i = np.asarray(mat_i, dtype=np.int64)
        mat_j = np.asarray(mat_j, dtype=np.int64)
        r_i = np.asarray(r_i, dtype=np.float64)
        r_j = np.asarray(r_j, dtype=np.float64)
        m_i = np.asarray(m_i, dtype=np.float64)
        m_j = np.asarray(m_j, dtype=np.float64)
        return EffectivePair(
            e_star=1.0 / (self.inv_e[mat_i] + self.inv_e[mat_j]),
            g_star=1.0 / (self.inv_g[mat_i] + self.inv_g[mat_j]),
            r_star=_harmonic(r_i, r_j),
            m_star=_harmonic(m_i, m_j),
            beta=self.beta[mat_i, mat_j],
            mu_s=self.mu_s[mat_i, mat_j],
            mu_r=self.mu_r[mat_i, mat_j],
            rolling_inertia=_harmonic(1.4 * m_i * r_i * r_i, 1.4 * m_j * r_j * r_j),
        )


class ContactForce(NamedTuple):
    normal_force: FloatArray  # on partner i
    tangential_force: FloatArray  # on partner i
    normal_magnitude: FloatArray  # signed, > 0 repulsive
    spring: FloatArray
    sliding: Any


class RollingTorque(NamedTuple):
    torque: FloatArray  # on partner i; partner j receives the negative
    spring: FloatArray


def _check_finite(*arrays: Any) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise IntegrationFault("non-finite contact kinematics")


def hertz_mindlin_force(
    pair: EffectivePair,
    overlap: Any,
    normal: Any,
    v_rel: Any,
    spring: Any,
    dt: float,
) -> ContactForce:
    """Contact force on partner i.

    `normal` points from i to j and `v_rel` is the velocity of i's contact
    point relative to j's. `spring` is the stored tangential displacement; it
    is projected onto the current tangent plane, incremented by vt*dt and,
    when the Coulomb limit is hit, rescaled so spring + damping equals the cap.
    """
    overlap = np.asarray(overlap, dtype=np.float64)
    if np.any(overlap <= 0):
        raise ValueError("contact list must be pre-filtered to overlap > 0")
    normal = np.asarray(normal, dtype=np.float64)
    v_rel = np.asarray(v_rel, dtype=np.float64)
    _check_finite(overlap, normal, v_rel)

    root = np.sqrt(pair.r_star * overlap)
    s_n = 2.0 * pair.e_star * root
    s_t = 8.0 * pair.g_star * root
    damp = _DAMP * np.abs(pair.beta)

    v_n = dot(v_rel, normal)
    f_n = (4.0 / 3.0) * pair.e_star * np.sqrt(pair.r_star) * overlap**1.5
    # unclamped: the rebound speed ratio matches `restitution` only with the full damping term
    f_n = f_n + damp * np.sqrt(s_n * pair.m_star) * v_n
    normal_force = -f_n[..., None] * normal

    v_t = v_rel - v_n[..., None] * normal
    spring = tangential(spring, normal) + v_t * dt
    c_t = damp * np.sqrt(s_t * pair.m_star)
    f_t = -s_t[..., None] * spring - c_t[..., None] * v_t

    cap = pair.mu_s * np.abs(f_n)
    f_t_mag = norm(f_t)
    sliding = f_t_mag > cap
    safe = np.where(f_t_mag > 0, f_t_mag, 1.0)
    f_t = np.where(sliding[..., None], f_t * (cap / safe)[..., None], f_t)
    spring = np.where(
        sliding[..., None], -(f_t + c_t[..., None] * v_t) / s_t[..., None], spring
    )
    return ContactForce(normal_force, f_t, f_n, spring, sliding)


def rolling_resistance_update(
    pair: EffectivePair,
    overlap: Any,
    normal: Any,
    dtheta: Any,
    normal_magnitude: Any,
    dt: float,
    spring_torque: Any,
    damping_ratio: float = ROLLING_DAMPING_RATIO,
) -> RollingTorque:
    """Elastic-plastic rolling spring with viscous damping below the limit.

    `dtheta` is the relative rotation (omega_i - omega_j) * dt; only its
    tangent-plane part counts as rolling.
    """
    overlap = np.asarray(overlap, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    dtheta = tangential(dtheta, normal)
    _check_finite(dtheta)

    k_r = 8.0 * pair.g_star * np.sqrt(pair.r_star * overlap) * pair.r_star * pair.r_star
    torque = tangential(spring_torque, normal) - k_r[..., None] * dtheta

    limit = pair.mu_r * pair.r_star * np.abs(normal_magnitude)
    mag = norm(torque)
    saturated = (mag > limit) | (limit <= 0)
    safe = np.where(mag > 0, mag, 1.0)
    torque = np.where(saturated[..., None], torque * (limit / safe)[..., None], torque)

    c_r = damping_ratio * 2.0 * np.sqrt(pair.rolling_inertia * k_r)
    damping = np.where(saturated[..., None], 0.0, -(c_r / dt)[..., None] * dtheta)
    return RollingTorque(torque + damping, torque)


def rayleigh_dt(material: MaterialParams, r_min: float, safety_fraction: float) -> float:
    if not 0 < safety_fraction <= 1:
        raise ValueError("safety_fraction must lie in (0, 1]")
    nu = material.poisson_ratio
    return (
        safety_fraction * math.pi * r_min * math.sqrt(material.density / material.shear_modulus)
        / (0.1631 * nu + 0.8766)
    )


def normal_elastic_energy(pair: EffectivePair, overlap: Any) -> Any:
    """Stored Hertz energy (8/15) E* sqrt(R*) delta^(5/2)."""
    overlap = np.asarray(overlap, dtype=np.float64)
    return (8.0 / 15.0) * pair.e_star * np.sqrt(pair.r_star) * overlap**2.5
