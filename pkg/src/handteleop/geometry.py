"""3-D vector and rotation primitives.

Vectors are numpy arrays of shape (3,), rotations are 3x3 row-major numpy
arrays. Everything here is pure and allocation-light; higher layers build
calibration and retargeting on top of these.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidRotation, SingularMatrix

# Validation tolerance for orthonormality / determinant; self-consistency
# checks in tests use 1e-12.
ROT_TOL = 1e-9


def vec3(x, y, z) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.cross(a, b)


def dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


def norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def unit(a: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(a)
    if n == 0.0:
        raise SingularMatrix("cannot normalize zero vector")
    return a / n


def is_rotation(m: np.ndarray, tol: float = ROT_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    if not np.allclose(m.T @ m, np.eye(3), atol=tol, rtol=0.0):
        return False
    return abs(np.linalg.det(m) - 1.0) <= tol


def check_rotation(m: np.ndarray, tol: float = ROT_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not is_rotation(m, tol):
        raise InvalidRotation("matrix is not a proper rotation within tolerance")
    return m


def orthonormalize(m: np.ndarray) -> np.ndarray:
    """Nearest proper rotation to m in the Frobenius norm (polar projection)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise SingularMatrix("input must be a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(m)
    if s[-1] <= 0.0 or np.linalg.matrix_rank(m) < 3:
        raise SingularMatrix("matrix is rank-deficient")
    d = np.sign(np.linalg.det(u @ vt))
    if d <= 0:
        # Reflection case: flip the axis of least singular value.
        u = u.copy()
        u[:, -1] *= -1.0
    r = u @ vt
    if np.linalg.det(r) <= 0:
        raise SingularMatrix("no proper rotation reachable by projection")
    return r


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle in [0, pi] from the trace."""
    tr = float(np.trace(r))
    return float(np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0)))


def rot_x(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def axis_angle(axis: np.ndarray, theta: float) -> np.ndarray:
    """Rodrigues formula."""
    k = unit(np.asarray(axis, dtype=float))
    kx = np.array(
        [[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]], dtype=float
    )
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


def rpy_from_rotation(r: np.ndarray) -> tuple[float, float, float]:
    """ZYX Euler angles (roll, pitch, yaw) of a rotation matrix."""
    sy = -r[2, 0]
    cy = np.sqrt(max(0.0, 1.0 - sy * sy))
    if cy > 1e-9:
        pitch = np.arctan2(sy, cy)
        roll = np.arctan2(r[2, 1], r[2, 2])
        yaw = np.arctan2(r[1, 0], r[0, 0])
    else:
        pitch = np.arctan2(sy, cy)
        roll = 0.0
        yaw = np.arctan2(-r[0, 1], r[1, 1])
    return float(roll), float(pitch), float(yaw)


def rotation_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def so3_log(r: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of r."""
    th = rotation_angle(r)
    if th < 1e-10:
        return np.zeros(3)
    if th > np.pi - 1e-6:
        # Near pi the antisymmetric part degenerates; recover axis from R + I.
        a = r + np.eye(3)
        k = unit(a[:, int(np.argmax(np.diag(a)))])
        return k * th
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return w / (2.0 * np.sin(th)) * th


def so3_exp(w: np.ndarray) -> np.ndarray:
    th = float(np.linalg.norm(w))
    if th < 1e-12:
        return np.eye(3)
    return axis_angle(w, th)


def slerp(r0: np.ndarray, r1: np.ndarray, alpha: float) -> np.ndarray:
    """Geodesic interpolation from r0 toward r1 by fraction alpha."""
    rel = so3_log(r0.T @ r1)
    return orthonormalize(r0 @ so3_exp(alpha * rel))


class Pose:
    """Position + orthonormal rotation."""

    __slots__ = ("position", "rotation")

    def __init__(self, position: np.ndarray, rotation: np.ndarray):
        self.position = np.asarray(position, dtype=float)
        self.rotation = check_rotation(rotation)

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.rotation.copy())

    def __repr__(self):
        return f"Pose(position={self.position.tolist()})"

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))
