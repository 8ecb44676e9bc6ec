"""Rotation algebra: quaternions, axis-angle, 6D encodings, and their jacobians.

Conventions
-----------
* Quaternions are stored (w, x, y, z) and kept unit-norm.
* Axis-angle vectors encode a rotation of |a| radians about a/|a|.
* All functions broadcast over leading batch dimensions and work in float64.
* Backward helpers return exact reverse-mode gradients for the unit-quaternion
  parameterization (no normalization layer is inserted, so products of unit
  quaternions must stay unit upstream).
"""

from __future__ import annotations

import numpy as np

# Below this rotation angle the closed forms switch to Taylor series.
_SMALL_ANGLE = 1e-4


def quat_identity(n: int | None = None) -> np.ndarray:
    if n is None:
        return np.array([1.0, 0.0, 0.0, 0.0])
    q = np.zeros((n, 4))
    q[:, 0] = 1.0
    return q


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b."""
    aw, ax, ay, az = (a[..., i] for i in range(4))
    bw, bx, by, bz = (b[..., i] for i in range(4))
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_left_matrix(a: np.ndarray) -> np.ndarray:
    """Matrix L(a) with a ⊗ b == L(a) @ b; the jacobian of the product in b."""
    aw, ax, ay, az = (a[..., i] for i in range(4))
    rows = [
        np.stack([aw, -ax, -ay, -az], axis=-1),
        np.stack([ax, aw, -az, ay], axis=-1),
        np.stack([ay, az, aw, -ax], axis=-1),
        np.stack([az, -ay, ax, aw], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = (q[..., i] for i in range(4))
    rows = [
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def matrix_backward_to_quat(q: np.ndarray, d_mat: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. R(q) back to the (unnormalized) quaternion."""
    w, x, y, z = (q[..., i] for i in range(4))
    g = d_mat
    dw = 2 * (
        -z * g[..., 0, 1] + y * g[..., 0, 2]
        + z * g[..., 1, 0] - x * g[..., 1, 2]
        - y * g[..., 2, 0] + x * g[..., 2, 1]
    )
    dx = 2 * (
        y * g[..., 0, 1] + z * g[..., 0, 2]
        + y * g[..., 1, 0] - 2 * x * g[..., 1, 1] - w * g[..., 1, 2]
        + z * g[..., 2, 0] + w * g[..., 2, 1] - 2 * x * g[..., 2, 2]
    )
    dy = 2 * (
        -2 * y * g[..., 0, 0] + x * g[..., 0, 1] + w * g[..., 0, 2]
        + x * g[..., 1, 0] + z * g[..., 1, 2]
        - w * g[..., 2, 0] + z * g[..., 2, 1] - 2 * y * g[..., 2, 2]
    )
    dz = 2 * (
        -2 * z * g[..., 0, 0] - w * g[..., 0, 1] + x * g[..., 0, 2]
        + w * g[..., 1, 0] - 2 * z * g[..., 1, 1] + y * g[..., 1, 2]
        + x * g[..., 2, 0] + y * g[..., 2, 1]
    )
    return np.stack([dw, dx, dy, dz], axis=-1)


def _sinc_half(theta: np.ndarray) -> np.ndarray:
    """sin(theta/2)/theta with a series fallback near zero."""
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    out = np.sin(safe / 2.0) / safe
    t2 = theta * theta
    return np.where(small, 0.5 - t2 / 48.0 + t2 * t2 / 3840.0, out)


def axis_angle_to_quat(a: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(a, axis=-1)
    s = _sinc_half(theta)
    w = np.cos(theta / 2.0)
    return np.concatenate([w[..., None], s[..., None] * a], axis=-1)


def axis_angle_backward(a: np.ndarray, d_quat: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. quat(a) back to the axis-angle vector a.

    Uses dw/da = -s/2 * a and dv/da = s*I + c2 * a a^T where
    s = sin(θ/2)/θ and c2 = (θ/2 cos(θ/2) - sin(θ/2)) / θ³.
    """
    theta = np.linalg.norm(a, axis=-1)
    s = _sinc_half(theta)
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    c2 = (0.5 * safe * np.cos(safe / 2.0) - np.sin(safe / 2.0)) / safe**3
    t2 = theta * theta
    c2 = np.where(small, -1.0 / 24.0 + t2 / 960.0, c2)

    dw = d_quat[..., 0]
    dv = d_quat[..., 1:]
    adv = np.einsum("...i,...i->...", a, dv)
    return (
        -0.5 * s[..., None] * dw[..., None] * a
        + s[..., None] * dv
        + c2[..., None] * adv[..., None] * a
    )


def axis_angle_to_matrix(a: np.ndarray) -> np.ndarray:
    return quat_to_matrix(axis_angle_to_quat(a))


def rotation_6d(rot: np.ndarray) -> np.ndarray:
    """Continuous 6D encoding: the first two columns of R, column-major."""
    return np.concatenate([rot[..., :, 0], rot[..., :, 1]], axis=-1)


def rotation_6d_backward(d_enc: np.ndarray) -> np.ndarray:
    """Gradient of the 6D encoding w.r.t. the full rotation matrix."""
    shape = d_enc.shape[:-1] + (3, 3)
    d_rot = np.zeros(shape)
    d_rot[..., :, 0] = d_enc[..., 0:3]
    d_rot[..., :, 1] = d_enc[..., 3:6]
    return d_rot


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Convenience: rotation matrix for a given axis and angle (tests, rigs)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return axis_angle_to_matrix(axis * angle)
