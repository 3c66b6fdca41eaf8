"""Reduced-coordinate rigid-body tree.

Each body has exactly one joint to its parent (or to the world) and bodies are
stored parents-first, so kinematics run level by level from the root. The
joint-space mass matrix is assembled from per-body Jacobians
(M = sum m Jv^T Jv + Jw^T I Jw), which is small for a few dozen DOF.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Optional, Sequence, Union

import numpy as np

from ..granular.vec import FloatArray, cross
from ..utils.errors import ConfigError, IntegrationFault, ModelFaultError
from .joints import JointSpec, joint_generalized_force

if TYPE_CHECKING:
    from ..coupling.shapes import CollisionShape

LoadInput = Union[FloatArray, Callable[[float], FloatArray], None]


@dataclass
class BodySpec:
    name: str
    mass: float
    inertia: FloatArray
    # principal axes in the body frame
    inertia_frame: FloatArray = field(default_factory=lambda: np.eye(3))
    shapes: list[CollisionShape] = field(default_factory=list)
    # massless helper body of the free palm mount
    virtual: bool = False

    def __post_init__(self) -> None:
        self.inertia = np.asarray(self.inertia, dtype=np.float64)
        if self.virtual:
            if self.mass != 0 or np.any(self.inertia != 0):
                raise ConfigError("virtual bodies are massless", path=f"bodies.{self.name}")
            return
        if not self.mass > 0:
            raise ConfigError("must be > 0", path=f"bodies.{self.name}.mass")
        if self.inertia.shape != (3,) or np.any(self.inertia <= 0):
            raise ConfigError("three positive values required", path=f"bodies.{self.name}.inertia")

    def inertia_tensor(self) -> FloatArray:
        f = self.inertia_frame
        return (f * self.inertia) @ f.T


@dataclass
class BodyStates:
    """World-frame pose and velocity of every body, plus the acceleration each
    body would have with zero joint accelerations (bias terms)."""

    rotations: FloatArray
    positions: FloatArray
    velocities: FloatArray
    angular_velocities: FloatArray
    joint_origins: FloatArray
    joint_axes: FloatArray
    bias_linear: FloatArray
    bias_angular: FloatArray


def _skew(v: FloatArray) -> FloatArray:
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


class KinematicTree:
    def __init__(
        self,
        bodies: Sequence[BodySpec],
        joints: Sequence[JointSpec],
        parents: Sequence[int],
        gravity: Any = (0.0, 0.0, -9.81),
        palm: int = 0,
        palm_axis: Optional[Any] = None,
    ) -> None:
        if not (len(bodies) == len(joints) == len(parents)):
            raise ConfigError("bodies, joints and parents must have equal length", path="tree")
        for k, parent in enumerate(parents):
            if not -1 <= parent < k:
                raise ConfigError(f"body {k} must come after its parent {parent}", path="tree")
        self.bodies = list(bodies)
        self.joints = list(joints)
        self.parents = np.asarray(parents, dtype=np.int64)
        self.gravity = np.asarray(gravity, dtype=np.float64)
        self.palm = palm
        self.palm_axis = (np.asarray(palm_axis, dtype=np.float64) if palm_axis is not None
                          else self.joints[0].axis.copy())
        self.q = np.array([j.rest for j in self.joints], dtype=np.float64)
        self.qd = np.zeros(len(self.joints))
        self.time = 0.0
        self.locked = np.array([j.locked for j in self.joints])
        self.max_violation = 0.0
        self._pack()

    def _pack(self) -> None:
        n = len(self.joints)
        self._mass = np.array([b.mass for b in self.bodies])
        self._inertia = np.array([b.inertia_tensor() for b in self.bodies])
        self._axis = np.array([j.axis for j in self.joints])
        self._poff = np.array([j.parent_offset for j in self.joints])
        self._coff = np.array([j.child_offset for j in self.joints])
        self._crot = np.array([j.child_rotation for j in self.joints])
        self._revolute = np.array([j.kind == "revolute" for j in self.joints])
        self._k = np.array([j.stiffness for j in self.joints])
        self._c = np.array([j.damping for j in self.joints])
        self._klim = np.array([j.limit_stiffness for j in self.joints])
        self._clim = np.array([j.limit_damping for j in self.joints])
        self._lower = np.array([j.lower for j in self.joints])
        self._upper = np.array([j.upper for j in self.joints])
        self._tol = np.array([j.tolerance for j in self.joints])
        depth = np.zeros(n, dtype=np.int64)
        for k in range(n):
            depth[k] = 0 if self.parents[k] < 0 else depth[self.parents[k]] + 1
        top = int(depth.max()) if n else -1
        self._levels = [np.flatnonzero(depth == d) for d in range(top + 1)]
        pb: list[int] = []
        pk: list[int] = []
        for b in range(n):
            k = b
            while k >= 0:
                pb.append(b)
                pk.append(k)
                k = int(self.parents[k])
        self._pair_body = np.array(pb, dtype=np.int64)
        self._pair_joint = np.array(pk, dtype=np.int64)
        self._palm_origin = self.kinematics(self.q, np.zeros(n)).positions[self.palm].copy()

    # -- sizes -------------------------------------------------------------
    @property
    def ndof(self) -> int:
        return len(self.joints)

    @property
    def body_count(self) -> int:
        return sum(not b.virtual for b in self.bodies)

    @property
    def total_mass(self) -> float:
        return float(self._mass.sum())

    def freeze(self, joints: Optional[Sequence[int]] = None) -> None:
        """Hold the given joints (all by default) at their current coordinate."""
        idx = range(self.ndof) if joints is None else joints
        for k in idx:
            self.locked[k] = True
            self.qd[k] = 0.0

    # -- kinematics --------------------------------------------------------
    def kinematics(
        self, q: Optional[FloatArray] = None, qd: Optional[FloatArray] = None
    ) -> BodyStates:
        q = self.q if q is None else np.asarray(q, dtype=np.float64)
        qd = self.qd if qd is None else np.asarray(qd, dtype=np.float64)
        n = self.ndof
        # row n is the world
        rot = np.zeros((n + 1, 3, 3))
        rot[n] = np.eye(3)
        pos = np.zeros((n + 1, 3))
        vel = np.zeros((n + 1, 3))
        omega = np.zeros((n + 1, 3))
        acc = np.zeros((n + 1, 3))
        alpha = np.zeros((n + 1, 3))
        origins = np.zeros((n, 3))
        axes = np.zeros((n, 3))
        parents = np.where(self.parents < 0, n, self.parents)

        for level in self._levels:
            b = level
            p = parents[b]
            rev = self._revolute[b][:, None]
            angle = np.where(self._revolute[b], q[b], 0.0)
            slide = np.where(self._revolute[b], 0.0, q[b])
            k = _skew(self._axis[b])
            s, c = np.sin(angle)[:, None, None], np.cos(angle)[:, None, None]
            local = np.eye(3) + s * k + (1.0 - c) * (k @ k)
            rp = rot[p]
            rot[b] = rp @ local @ self._crot[b]
            a = np.einsum("bij,bj->bi", rp, self._axis[b])
            o = pos[p] + np.einsum("bij,bj->bi", rp, self._poff[b] + self._axis[b] * slide[:, None])
            x = o + np.einsum("bij,bj->bi", rot[b], self._coff[b])
            aqd = a * qd[b][:, None]
            wp = omega[p]
            w = wp + np.where(rev, aqd, 0.0)
            r1, r2 = o - pos[p], x - o
            vel[b] = vel[p] + cross(wp, r1) + cross(w, r2) + np.where(rev, 0.0, aqd)
            al = alpha[p] + np.where(rev, cross(wp, aqd), 0.0)
            acc[b] = (
                acc[p] + cross(alpha[p], r1) + cross(wp, cross(wp, r1))
                + cross(al, r2) + cross(w, cross(w, r2))
                + np.where(rev, 0.0, 2.0 * cross(wp, aqd))
            )
            pos[b], omega[b], alpha[b] = x, w, al
            origins[b], axes[b] = o, a
        return BodyStates(rot[:n], pos[:n], vel[:n], omega[:n], origins, axes, acc[:n], alpha[:n])

    def jacobians(self, st: BodyStates) -> tuple[FloatArray, FloatArray]:
        """Linear (COM) and angular Jacobians, shape (bodies, 3, dof)."""
        n = self.ndof
        jv = np.zeros((n, 3, n))
        jw = np.zeros((n, 3, n))
        b, k = self._pair_body, self._pair_joint
        a = st.joint_axes[k]
        rev = self._revolute[k][:, None]
        jv[b, :, k] = np.where(rev, cross(a, st.positions[b] - st.joint_origins[k]), a)
        jw[b, :, k] = np.where(rev, a, 0.0)
        return jv, jw

    def world_inertia(self, st: BodyStates) -> FloatArray:
        return st.rotations @ self._inertia @ np.transpose(st.rotations, (0, 2, 1))

    def mass_matrix(self, st: BodyStates, jv: FloatArray, jw: FloatArray) -> FloatArray:
        iw = self.world_inertia(st)
        m = np.einsum("b,bik,bil->kl", self._mass, jv, jv)
        return m + np.einsum("bik,bij,bjl->kl", jw, iw, jw)

    def joint_forces(self, t: float, q: Optional[FloatArray] = None,
                     qd: Optional[FloatArray] = None) -> FloatArray:
        q = self.q if q is None else q
        qd = self.qd if qd is None else qd
        return np.array([
            joint_generalized_force(j, float(q[k]), float(qd[k]), t)
            for k, j in enumerate(self.joints)
        ])

    def generalized_forces(
        self,
        st: BodyStates,
        jv: FloatArray,
        jw: FloatArray,
        forces: Optional[FloatArray],
        torques: Optional[FloatArray],
        load: Optional[FloatArray],
        t: float,
    ) -> FloatArray:
        """Right-hand side tau of M qdd = tau, joint springs included."""
        n = self.ndof
        iw = self.world_inertia(st)
        f = self._mass[:, None] * self.gravity[None, :]
        tq = -cross(st.angular_velocities, np.einsum("bij,bj->bi", iw, st.angular_velocities))
        if forces is not None:
            f = f + forces
        if torques is not None:
            tq = tq + torques
        f = f - self._mass[:, None] * st.bias_linear
        tq = tq - np.einsum("bij,bj->bi", iw, st.bias_angular)
        tau = np.einsum("bik,bi->k", jv, f) + np.einsum("bik,bi->k", jw, tq)
        if load is not None:
            tau = tau + jv[self.palm].T @ np.asarray(load, dtype=np.float64)
        return tau + self.joint_forces(t) if n else tau

    def implicit_gains(self) -> tuple[FloatArray, FloatArray]:
        """Diagonal stiffness/damping used in the linearly implicit update."""
        out = (self.q > self._upper) | (self.q < self._lower)
        k = self._k + np.where(out, self._klim, 0.0)
        c = self._c + np.where(out, self._clim, 0.0)
        return k, c

    # -- monitors ----------------------------------------------------------
    def limit_violation(self) -> float:
        """Largest overshoot beyond a limit, as a multiple of that joint's tolerance."""
        over = np.maximum(np.maximum(self.q - self._upper, self._lower - self.q), 0.0)
        over = np.where(self.locked, 0.0, over / self._tol)
        return float(over.max()) if self.ndof else 0.0

    def palm_axial(self, st: Optional[BodyStates] = None) -> float:
        """Palm displacement along the load axis from its initial position."""
        st = st or self.kinematics()
        return float(self.palm_axis @ (st.positions[self.palm] - self._palm_origin))

    def energy(self) -> float:
        """Kinetic + joint spring/limit potential + gravitational potential."""
        st = self.kinematics()
        jv, jw = self.jacobians(st)
        m = self.mass_matrix(st, jv, jw)
        ke = 0.5 * float(self.qd @ m @ self.qd)
        pe = sum(j.potential(float(self.q[k])) for k, j in enumerate(self.joints))
        pe -= float(np.sum(self._mass * (st.positions @ self.gravity)))
        return ke + pe


def _load_at(load: LoadInput, t: float) -> Optional[FloatArray]:
    if load is None:
        return None
    if callable(load):
        return np.asarray(load(t), dtype=np.float64)
    return np.asarray(load, dtype=np.float64)


def _solve(a: FloatArray, b: FloatArray, free: np.ndarray) -> FloatArray:
    out = np.zeros_like(b)
    if not np.any(free):
        return out
    try:
        out[free] = np.linalg.solve(a[np.ix_(free, free)], b[free])
    except np.linalg.LinAlgError as e:
        raise ModelFaultError("singular joint-space mass matrix") from e
    return out


def forward_dynamics(
    tree: KinematicTree,
    forces: Optional[FloatArray] = None,
    torques: Optional[FloatArray] = None,
    load: LoadInput = None,
    t: float = 0.0,
) -> FloatArray:
    """Joint accelerations for the current state; locked joints get zero."""
    st = tree.kinematics()
    jv, jw = tree.jacobians(st)
    m = tree.mass_matrix(st, jv, jw)
    tau = tree.generalized_forces(st, jv, jw, forces, torques, _load_at(load, t), t)
    return _solve(m, tau, ~tree.locked)


def mbd_step(
    tree: KinematicTree,
    forces: Optional[FloatArray],
    torques: Optional[FloatArray],
    load: LoadInput,
    t: float,
    dt_cpl: float,
    substeps: int = 10,
) -> None:
    """Advance (q, qd) by one coupling step with `substeps` linearly implicit steps.

    Body wrenches are held constant; joint springs, dampers and active limit
    penalties enter the update implicitly:
    (M + h C + h^2 K) dqd = h (tau - h K qd).
    """
    if not dt_cpl > 0:
        raise ConfigError("must be > 0", path="solver.dt_cpl")
    h = dt_cpl / substeps
    free = ~tree.locked
    for s in range(substeps):
        ts = t + s * h
        st = tree.kinematics()
        jv, jw = tree.jacobians(st)
        m = tree.mass_matrix(st, jv, jw)
        tau = tree.generalized_forces(st, jv, jw, forces, torques, _load_at(load, ts), ts)
        k, c = tree.implicit_gains()
        a = m + np.diag(h * c + h * h * k)
        dqd = _solve(a, h * (tau - h * k * tree.qd), free)
        tree.qd = np.where(free, tree.qd + dqd, 0.0)
        tree.q = tree.q + h * tree.qd
        if not (np.all(np.isfinite(tree.q)) and np.all(np.isfinite(tree.qd))):
            raise IntegrationFault("non-finite joint state", time=ts, phase="mbd")
        tree.max_violation = max(tree.max_violation, tree.limit_violation())
    tree.time = t + dt_cpl
