"""Rotation-group helpers.

Rotations are plain ``numpy`` arrays of shape ``(..., 3, 3)`` indexed
``R[row, col]`` (C / row-major order). ``R`` maps body-frame vectors to the
world frame. Every function broadcasts over leading batch dimensions.
"""
import numpy as np

SMALL_ANGLE = 1e-8
_EYE = np.eye(3)


def cross(a, b):
    """``np.cross`` over the last axis, without its axis bookkeeping overhead."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def hat(v):
    """Skew-symmetric matrix such that ``hat(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vee(M):
    """Inverse of :func:`hat` (reads the skew part only)."""
    M = np.asarray(M, dtype=float)
    return np.stack([M[..., 2, 1], M[..., 0, 2], M[..., 1, 0]], axis=-1)


def exp_so3(v):
    """Rodrigues exponential of the rotation vector ``v`` (radians).

    Below ``SMALL_ANGLE`` the sin/cos coefficients switch to their Taylor
    series so ``v -> 0`` is handled without a 0/0.
    """
    v = np.asarray(v, dtype=float)
    theta2 = np.sum(v * v, axis=-1)
    theta = np.sqrt(theta2)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
    K = hat(v)
    return _EYE + a[..., None, None] * K + b[..., None, None] * (K @ K)


def euler_angles(R):
    """Roll, pitch, yaw of ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.

    At gimbal lock (``|pitch| = pi/2``) yaw is reported as 0 and the whole
    residual rotation is attributed to roll.
    """
    R = np.asarray(R, dtype=float)
    r20 = np.clip(R[..., 2, 0], -1.0, 1.0)
    pitch = -np.arcsin(r20)
    locked = np.abs(r20) >= 1.0 - 1e-12
    roll = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    # pitch = -pi/2 * sign(r20): R[0, 1:] = (-sign * sin roll, -sign * cos roll)
    sign = np.sign(r20)
    roll_locked = np.arctan2(-sign * R[..., 0, 1], -sign * R[..., 0, 2])
    roll = np.where(locked, roll_locked, roll)
    yaw = np.where(locked, 0.0, yaw)
    return np.stack([roll, pitch, yaw], axis=-1)


def from_euler(angles):
    """Rotation matrix from ``(roll, pitch, yaw)``; inverse of :func:`euler_angles`."""
    angles = np.asarray(angles, dtype=float)
    roll, pitch, yaw = angles[..., 0], angles[..., 1], angles[..., 2]
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


def yaw_rotation(R):
    """Rotation about world z by the yaw of ``R`` (heading-only frame)."""
    R = np.asarray(R, dtype=float)
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    c, s = np.cos(yaw), np.sin(yaw)
    out = np.zeros(R.shape)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def orthonormality_error(R):
    """Frobenius norm of ``R^T R - I``."""
    R = np.asarray(R, dtype=float)
    E = np.swapaxes(R, -1, -2) @ R - np.eye(3)
    return np.sqrt(np.sum(E * E, axis=(-1, -2)))
