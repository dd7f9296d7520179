"""Rotation representations and distances on SO(3).

Rotations are plain 3x3 numpy arrays (orthonormal, det +1), unit
quaternions are length-4 arrays in (w, x, y, z) order, and Euler angles
are length-3 arrays (theta1, theta2, theta3) composing intrinsically as

    R(theta) = R_z(theta3) @ R_y(theta2) @ R_x(theta1)

with every component wrapped to (-pi, pi].  The distance functions here
are the building blocks of the orientation kernels: the geodesic (arc)
distance, the chordal view distance sqrt(tr(I - R1^T R2)), and the raw
quaternion distance 2*||q1 - q2|| which deliberately keeps the double
cover observable (q and -q encode the same rotation but are far apart).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Pose",
    "rot_axis",
    "euler_to_matrix",
    "matrix_to_euler",
    "matrix_to_quat",
    "quat_to_matrix",
    "normalize_quat",
    "canonical_quat",
    "geodesic_distance",
    "view_distance",
    "quat_distance",
    "random_rotation",
    "wrap_angle",
    "check_rotation",
]

_ROTATION_TOL = 1e-9


def wrap_angle(angle):
    """Wrap angle(s) to the interval (-pi, pi]; in-range values pass through."""
    a = np.asarray(angle, dtype=np.float64)
    wrapped = np.remainder(a + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    wrapped = np.where((a > -np.pi) & (a <= np.pi), a, wrapped)
    if a.ndim == 0:
        return float(wrapped)
    return wrapped


def check_rotation(R, tol=_ROTATION_TOL):
    """Raise ValueError unless R is orthonormal with determinant +1."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("rotation matrix contains non-finite entries")
    err = np.max(np.abs(R.T @ R - np.eye(3)))
    if err > tol:
        raise ValueError(f"matrix is not orthonormal (max |R^T R - I| = {err:.3g})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > tol:
        raise ValueError(f"matrix determinant is {det:.12g}, expected +1")
    return R


@dataclass(frozen=True, eq=False)
class Pose:
    """A camera pose: translation p (meters) plus rotation matrix R."""

    p: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("translation contains non-finite entries")
        R = check_rotation(self.R)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "R", R)


def rot_axis(axis, angle):
    """Rotation matrix about a single coordinate axis ('x', 'y' or 'z')."""
    if not (isinstance(angle, (int, float, np.floating, np.integer)) and math.isfinite(angle)):
        raise ValueError(f"angle must be finite, got {angle!r}")
    c = math.cos(angle)
    s = math.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def euler_to_matrix(theta):
    """Compose R_z(theta3) @ R_y(theta2) @ R_x(theta1)."""
    t = np.asarray(theta, dtype=np.float64)
    if t.shape != (3,):
        raise ValueError(f"Euler angles must be a 3-vector, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("Euler angles contain non-finite entries")
    return rot_axis("z", t[2]) @ rot_axis("y", t[1]) @ rot_axis("x", t[0])


def matrix_to_euler(R):
    """Recover (theta1, theta2, theta3) with R = Rz(t3) Ry(t2) Rx(t1).

    At gimbal lock (|theta2| = pi/2) theta1 and theta3 are degenerate;
    theta1 is set to 0 and the remaining rotation goes into theta3.
    """
    R = np.asarray(R, dtype=np.float64)
    s2 = min(1.0, max(-1.0, -R[2, 0]))
    t2 = math.asin(s2)
    if abs(s2) < 1.0 - 1e-12:
        t1 = math.atan2(R[2, 1], R[2, 2])
        t3 = math.atan2(R[1, 0], R[0, 0])
    else:
        t1 = 0.0
        t3 = math.atan2(-R[0, 1], R[1, 1])
    return np.array([wrap_angle(t1), wrap_angle(t2), wrap_angle(t3)])


def normalize_quat(q):
    """Normalize to a unit quaternion whose computed norm is exactly 1.0.

    After the division the largest-magnitude component is nudged by at
    most a few ulps until np.sqrt(np.sum(q*q)) == 1.0 holds in floating
    point.  Downstream identities then hold exactly, e.g. the distance
    2*||q - (-q)|| evaluates to exactly 4.
    """
    q = np.asarray(q, dtype=np.float64).copy()
    if q.shape != (4,):
        raise ValueError(f"quaternion must be a 4-vector, got shape {q.shape}")
    norm = np.sqrt(np.sum(q * q))
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot normalize zero or non-finite quaternion")
    q /= norm
    j = int(np.argmax(np.abs(q)))
    for _ in range(32):
        s = np.sum(q * q)
        if np.sqrt(s) == 1.0:
            break
        toward = np.inf if (s < 1.0) == (q[j] > 0) else -np.inf
        q[j] = np.nextafter(q[j], toward)
    return q


def canonical_quat(q):
    """Fix the double-cover sign: q_w >= 0, ties broken by the first nonzero component."""
    q = np.asarray(q, dtype=np.float64)
    for component in q:
        if component > 0.0:
            return q.copy()
        if component < 0.0:
            return -q
    return q.copy()


def matrix_to_quat(R):
    """Convert a rotation matrix to a canonicalized unit quaternion (w, x, y, z)."""
    R = check_rotation(R)
    t = R[0, 0] + R[1, 1] + R[2, 2]
    # Shepperd's method: branch on the largest of trace and diagonal entries.
    if t >= R[0, 0] and t >= R[1, 1] and t >= R[2, 2]:
        w = 0.5 * math.sqrt(1.0 + t)
        inv = 0.25 / w
        q = np.array([
            w,
            (R[2, 1] - R[1, 2]) * inv,
            (R[0, 2] - R[2, 0]) * inv,
            (R[1, 0] - R[0, 1]) * inv,
        ])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        x = 0.5 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        inv = 0.25 / x
        q = np.array([
            (R[2, 1] - R[1, 2]) * inv,
            x,
            (R[0, 1] + R[1, 0]) * inv,
            (R[0, 2] + R[2, 0]) * inv,
        ])
    elif R[1, 1] >= R[2, 2]:
        y = 0.5 * math.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        inv = 0.25 / y
        q = np.array([
            (R[0, 2] - R[2, 0]) * inv,
            (R[0, 1] + R[1, 0]) * inv,
            y,
            (R[1, 2] + R[2, 1]) * inv,
        ])
    else:
        z = 0.5 * math.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        inv = 0.25 / z
        q = np.array([
            (R[1, 0] - R[0, 1]) * inv,
            (R[0, 2] + R[2, 0]) * inv,
            (R[1, 2] + R[2, 1]) * inv,
            z,
        ])
    return normalize_quat(canonical_quat(q))


def quat_to_matrix(q):
    """Convert a unit quaternion to a rotation matrix.

    Every term is quadratic in q, so quat_to_matrix(q) and
    quat_to_matrix(-q) are bitwise identical (double cover).
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValueError(f"quaternion must be a 4-vector, got shape {q.shape}")
    norm = np.sqrt(np.sum(q * q))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"quaternion norm is {norm:.12g}, expected 1")
    w, x, y, z = q
    return np.array([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])


def geodesic_distance(R1, R2):
    """Arc length between rotations: arccos((tr(R1^T R2) - 1) / 2), in [0, pi].

    Accepts stacked inputs with leading broadcast dimensions.
    """
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    t = np.sum(R1 * R2, axis=(-2, -1))
    d = np.arccos(np.clip(0.5 * (t - 1.0), -1.0, 1.0))
    return float(d) if d.ndim == 0 else d


def view_distance(R1, R2):
    """Chordal distance sqrt(tr(I - R1^T R2)), in [0, 2].

    The trace argument is evaluated as 0.5*||R1 - R2||_F^2, which equals
    tr(I - R1^T R2) for orthonormal inputs and is exactly 0 when the
    matrices coincide bitwise; it is clamped to [0, 4].  Accepts stacked
    inputs with leading broadcast dimensions.
    """
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    diff = R1 - R2
    arg = np.clip(0.5 * np.sum(diff * diff, axis=(-2, -1)), 0.0, 4.0)
    d = np.sqrt(arg)
    return float(d) if d.ndim == 0 else d


def quat_distance(q1, q2):
    """Raw quaternion distance 2*||q1 - q2||, NOT sign-canonicalized.

    The double cover stays visible: quat_distance(q, -q) = 4 even though
    both encode the same rotation.  Accepts stacked inputs.
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    diff = q1 - q2
    d = 2.0 * np.sqrt(np.sum(diff * diff, axis=-1))
    return float(d) if d.ndim == 0 else d


def random_rotation(seed):
    """Uniformly distributed rotation matrix, deterministic per seed.

    Sampling: normalized 4-dimensional Gaussian quaternion (the uniform
    Haar measure on SO(3)).
    """
    rng = np.random.default_rng(seed)
    q = normalize_quat(rng.standard_normal(4))
    return quat_to_matrix(q)
