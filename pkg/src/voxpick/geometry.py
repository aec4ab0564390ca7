"""Rotation representations and the 4-fold z-symmetry canonicalization.

Orientations cross module boundaries as Modified Rodrigues Parameters
(sigma = axis * tan(theta/4)), stored in the shadow-normalized set
||sigma|| <= 1 so the representation stays finite for every rotation.
Quaternions (w, x, y, z scalar-first) are used internally for composition.

90-degree z-rotations are implemented as component permutations and sign
flips, never as floating-point matrix products, so canonicalization and its
inverse are exact.
"""

from __future__ import annotations

import numpy as np

_UNIT_TOL = 1e-9


# ---------------------------------------------------------------------------
# quaternions (scalar-first, unit)


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    qv = np.concatenate([[0.0], v])
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[1:]


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


# ---------------------------------------------------------------------------
# Modified Rodrigues Parameters


def mrp_from_quaternion(q: np.ndarray) -> np.ndarray:
    """Convert a unit quaternion to a shadow-normalized MRP vector.

    sigma = q_vec / (1 + q_w); if ||sigma|| > 1 the shadow set
    sigma' = -sigma / ||sigma||^2 is returned, keeping ||sigma|| <= 1.

    Raises ValueError for a non-unit quaternion.
    """
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if abs(n - 1.0) > _UNIT_TOL:
        raise ValueError(f"quaternion norm {n:.12f} is not 1 within {_UNIT_TOL}")
    if q[0] < -1.0 + 1e-12:
        # 360-degree rotation: identity in SO(3); sigma of the shadow set is 0
        return np.zeros(3)
    sigma = q[1:] / (1.0 + q[0])
    s2 = float(sigma @ sigma)
    if s2 > 1.0:
        sigma = -sigma / s2
    return sigma


def mrp_to_quaternion(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    s2 = float(sigma @ sigma)
    return np.concatenate([[(1.0 - s2)], 2.0 * sigma]) / (1.0 + s2)


def mrp_shadow(sigma: np.ndarray) -> np.ndarray:
    """Switch to the other MRP set describing the same rotation."""
    s2 = float(sigma @ sigma)
    if s2 < 1e-16:
        return np.zeros(3)
    return -sigma / s2


def mrp_normalize(sigma: np.ndarray) -> np.ndarray:
    """Pick the set with ||sigma|| <= 1."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if float(sigma @ sigma) > 1.0:
        return mrp_shadow(sigma)
    return sigma


def mrp_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    return mrp_from_quaternion(quat_from_axis_angle(axis, angle))


# ---------------------------------------------------------------------------
# exact 90-degree z-rotations


def rotate_z_90(v: np.ndarray, k: int) -> np.ndarray:
    """Rotate a 3-vector by k * 90 degrees about +z, exactly.

    Component permutations only, so no floating-point rotation error; works
    on (..., 3) arrays.
    """
    v = np.asarray(v)
    k = k % 4
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    if k == 0:
        return v.copy()
    if k == 1:
        return np.stack([-y, x, z], axis=-1)
    if k == 2:
        return np.stack([-x, -y, z], axis=-1)
    return np.stack([y, -x, z], axis=-1)


def rotate_grid_z90(grid: np.ndarray, k: int) -> np.ndarray:
    """Rotate an (X, Y, ...) voxel grid by k * 90 degrees about its z axis.

    Index mapping for k=1 is (x, y) -> (nx-1-y, x), i.e. np.rot90 over the
    first two axes. Exact (a permutation of cells).
    """
    return np.ascontiguousarray(np.rot90(grid, k % 4, axes=(0, 1)))


def symmetry_index(position: np.ndarray) -> int:
    """Smallest k in {0..3} whose rotation puts (x, y) into x>=0, y>=0."""
    x, y = float(position[0]), float(position[1])
    for k in range(4):
        rx, ry = _rot_xy(x, y, k)
        if rx >= 0.0 and ry >= 0.0:
            return k
    return 0  # unreachable: one quadrant always matches


def _rot_xy(x: float, y: float, k: int):
    if k == 0:
        return x, y
    if k == 1:
        return -y, x
    if k == 2:
        return -x, -y
    return y, -x


def canonicalize_vectors(vectors: dict, grid: np.ndarray | None = None):
    """Rotate named 3-vectors (and optionally a voxel grid) into the canonical quadrant.

    k is chosen from vectors["position"]; every entry is rotated by the same
    k (MRPs rotate as vectors: conjugation by Rz leaves the angle fixed and
    rotates the axis). Returns (rotated dict, rotated grid or None, k).
    """
    k = symmetry_index(vectors["position"])
    out = {name: rotate_z_90(np.asarray(v, dtype=np.float64), k) for name, v in vectors.items()}
    g = rotate_grid_z90(grid, k) if grid is not None else None
    return out, g, k


def decanonicalize_action_vectors(dpos: np.ndarray, drot: np.ndarray, k: int):
    """Undo a k * 90-degree canonicalization on action deltas, exactly."""
    return rotate_z_90(dpos, -k % 4), rotate_z_90(drot, -k % 4)
