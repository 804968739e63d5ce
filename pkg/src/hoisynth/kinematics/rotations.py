"""Rotation representations: 6D <-> matrix, rotation vectors, yaw helpers.

Conventions: right-handed frames, Y is up, matrices act on column vectors.
The 6D representation stores the first two columns of the rotation matrix;
a matrix is recovered by Gram-Schmidt plus a cross product.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateRotationError

_EPS = 1e-8


def rot6d_to_matrix(r: np.ndarray) -> np.ndarray:
    """Convert 6D rotation(s) (..., 6) to rotation matrices (..., 3, 3).

    Column 1 is the normalized first triple, column 2 the second triple
    orthogonalized against it, column 3 their cross product.
    """
    r = np.asarray(r, dtype=np.float64)
    a1 = r[..., 0:3]
    a2 = r[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < _EPS):
        raise DegenerateRotationError("first 6D triple has near-zero norm")
    b1 = a1 / n1
    a2p = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(a2p, axis=-1, keepdims=True)
    if np.any(n2 < _EPS):
        raise DegenerateRotationError("second 6D triple is parallel to the first")
    b2 = a2p / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_rot6d(m: np.ndarray) -> np.ndarray:
    """Inverse of rot6d_to_matrix: keep the first two matrix columns."""
    m = np.asarray(m, dtype=np.float64)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def rotvec_to_matrix(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula for rotation vector(s) (..., 3) -> (..., 3, 3)."""
    v = np.asarray(v, dtype=np.float64)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    small = theta[..., 0] < 1e-12
    axis = np.where(theta > 1e-12, v / np.maximum(theta, 1e-12), 0.0)
    x, y, z = axis[..., 0], axis[..., 1], axis[..., 2]
    zero = np.zeros_like(x)
    k = np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
    s = np.sin(theta)[..., None]
    c = np.cos(theta)[..., None]
    eye = np.broadcast_to(np.eye(3), k.shape)
    m = eye + s * k + (1.0 - c) * (k @ k)
    return np.where(small[..., None, None], eye, m)


def matrix_to_rotvec(m: np.ndarray) -> np.ndarray:
    """Log map (..., 3, 3) -> rotation vector(s) (..., 3)."""
    m = np.asarray(m, dtype=np.float64)
    tr = np.clip((np.trace(m, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(tr)
    # Antisymmetric part carries the axis for theta away from 0 and pi.
    w = np.stack(
        [
            m[..., 2, 1] - m[..., 1, 2],
            m[..., 0, 2] - m[..., 2, 0],
            m[..., 1, 0] - m[..., 0, 1],
        ],
        axis=-1,
    )
    sin_t = np.sin(theta)
    generic = w * (theta / np.maximum(2.0 * sin_t, 1e-12))[..., None]
    small = theta < 1e-7
    near_pi = theta > np.pi - 1e-4
    if np.any(near_pi):
        # Near pi the antisymmetric part vanishes; recover the axis from the
        # symmetric part: (R + R^T)/2 = cos(t) I + (1 - cos(t)) aa^T.
        flat_m = m.reshape(-1, 3, 3)
        flat_tr = tr.reshape(-1)
        flat_theta = theta.reshape(-1)
        flat_w = w.reshape(-1, 3)
        pi_branch = generic.reshape(-1, 3).copy()
        for i in np.nonzero(near_pi.reshape(-1))[0]:
            aat = ((flat_m[i] + flat_m[i].T) / 2.0 - flat_tr[i] * np.eye(3)) / (
                1.0 - flat_tr[i]
            )
            diag = np.clip(np.diag(aat), 0.0, None)
            j = int(np.argmax(diag))
            axis = aat[j] / max(np.sqrt(diag[j]), 1e-12)
            axis /= max(np.linalg.norm(axis), 1e-12)
            if float(np.dot(axis, flat_w[i])) < 0.0:
                axis = -axis
            pi_branch[i] = axis * flat_theta[i]
        generic = pi_branch.reshape(generic.shape)
    return np.where(small[..., None], w / 2.0, generic)


def yaw_matrix(angle: float | np.ndarray) -> np.ndarray:
    """Rotation(s) about the +Y (up) axis."""
    angle = np.asarray(angle, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    zero = np.zeros_like(c)
    one = np.ones_like(c)
    return np.stack(
        [
            np.stack([c, zero, s], axis=-1),
            np.stack([zero, one, zero], axis=-1),
            np.stack([-s, zero, c], axis=-1),
        ],
        axis=-2,
    )


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Smallest rotation taking unit vector a onto unit vector b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    if c < -1.0 + 1e-10:
        # Opposite vectors: rotate pi about any axis orthogonal to a.
        helper = np.array([1.0, 0.0, 0.0])
        if abs(a[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        axis /= np.linalg.norm(axis)
        return rotvec_to_matrix(axis * np.pi)
    s = np.linalg.norm(v)
    if s < 1e-12:
        return np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1.0 - c) / (s * s))
