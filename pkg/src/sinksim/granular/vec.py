"""Row-wise 3-vector helpers.

Components are combined in a fixed order so results do not depend on array
length or memory layout (needed for bit-identical runs).
"""
from __future__ import annotations
from typing import Any

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]


def dot(a: Any, b: Any) -> FloatArray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def norm(a: Any) -> FloatArray:
    return np.sqrt(dot(a, a))


def cross(a: Any, b: Any) -> FloatArray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.float64)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def tangential(v: Any, n: Any) -> FloatArray:
    """Component of `v` orthogonal to the unit vector `n`."""
    v = np.asarray(v, dtype=np.float64)
    return v - dot(v, n)[..., None] * np.asarray(n, dtype=np.float64)


def scatter_add(index: IntArray, values: FloatArray, size: int) -> FloatArray:
    """Sum rows of `values` into `size` bins, in index order."""
    out = np.zeros((size,) + values.shape[1:], dtype=np.float64)
    if index.size == 0:
        return out
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=size).astype(np.float64)
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(index, weights=values[:, k], minlength=size)
    return out


def rotation_matrix(axis: Any, angle: float) -> FloatArray:
    """Rodrigues rotation about a unit axis."""
    a = np.asarray(axis, dtype=np.float64)
    x, y, z = a
    c, s = np.cos(angle), np.sin(angle)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def rotvec_matrix(rotvec: Any) -> FloatArray:
    """Rotation matrix for a rotation vector (axis * angle)."""
    r = np.asarray(rotvec, dtype=np.float64)
    angle = float(np.sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]))
    if angle < 1e-300:
        return np.eye(3)
    return rotation_matrix(r / angle, angle)
