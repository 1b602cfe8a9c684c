"""Small 3D math layer: vectors, quaternions, rigid transforms, frames.

Conventions used across the package:

- vectors are float64 numpy arrays of shape (3,), batches are (N, 3)
- quaternions are scalar-first [w, x, y, z] and kept unit length
- angles are radians, times are seconds
- rotation matrices are right-handed with det = +1, applied as column
  vectors (R @ v)

Any direction whose magnitude is at or below EPS is treated as degenerate
rather than normalized into noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirectionError, ParallelAxesError

# magnitude below which a direction carries no usable information
EPS = 1e-9

# sine of the angle below which two axes count as parallel
PARALLEL_EPS = 1e-6


def norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.dot(v, v)))


def unit(v: np.ndarray) -> np.ndarray:
    n = norm(v)
    if n <= EPS:
        raise DegenerateDirectionError(f"cannot normalize near-zero vector {v!r}")
    return v / n


# ===========================================================================
# quaternions, scalar first [w, x, y, z]
# ===========================================================================


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.sqrt(np.dot(q, q)))
    if n <= EPS:
        raise DegenerateDirectionError("cannot normalize near-zero quaternion")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a (3,) vector by a unit quaternion."""
    qv = q[1:]
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    a = unit(axis)
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), s * a[0], s * a[1], s * a[2]])


def quat_to_mat3(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def quat_slerp(qa: np.ndarray, qb: np.ndarray, u: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc.

    Falls back to normalized lerp when the inputs are nearly aligned, where
    the sin ratio loses precision.
    """
    d = float(np.dot(qa, qb))
    if d < 0.0:
        qb = -qb
        d = -d
    if d > 0.9995:
        return quat_normalize(qa + u * (qb - qa))
    theta = np.arccos(np.clip(d, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - u) * theta) / s) * qa + (np.sin(u * theta) / s) * qb


def quat_rotation_vector(q: np.ndarray) -> np.ndarray:
    """Axis times angle for a unit quaternion, shortest representation.

    The sign is corrected so the returned angle lies in [0, pi], which keeps
    finite differences on the short way around.
    """
    if q[0] < 0.0:
        q = -q
    v = q[1:]
    s = float(np.sqrt(np.dot(v, v)))
    if s < 1e-12:
        # small angle: q ~ (1, r/2)
        return 2.0 * v
    angle = 2.0 * np.arctan2(s, float(q[0]))
    return v * (angle / s)


# ===========================================================================
# rotation matrices and frames
# ===========================================================================


def axis_angle_mat3(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    n = unit(axis)
    k = np.array(
        [
            [0.0, -n[2], n[1]],
            [n[2], 0.0, -n[0]],
            [-n[1], n[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_from_to(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shortest-arc rotation taking direction a onto direction b.

    For antiparallel inputs the arc is ambiguous; the tie is broken by
    rotating pi about an axis orthogonal to a, picking the coordinate axis
    with the smallest |component| of a so the choice is deterministic.

    Raises:
        DegenerateDirectionError: either input has magnitude <= EPS.
    """
    ah = unit(np.asarray(a, dtype=float))
    bh = unit(np.asarray(b, dtype=float))
    v = np.cross(ah, bh)
    s = norm(v)
    c = float(np.dot(ah, bh))
    if s <= 1e-12:
        if c > 0.0:
            return np.eye(3)
        e = np.zeros(3)
        e[int(np.argmin(np.abs(ah)))] = 1.0
        n = unit(e - np.dot(e, ah) * ah)
        return 2.0 * np.outer(n, n) - np.eye(3)
    return axis_angle_mat3(v / s, float(np.arctan2(s, c)))


def frame_from_primary_secondary(primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    """Orthonormal frame with column y along primary and column z as close
    as possible to secondary.

    Column z is the Gram-Schmidt projection of secondary orthogonal to
    primary; column x = y cross z closes the right-handed frame (det = +1).

    Raises:
        DegenerateDirectionError: either input has magnitude <= EPS.
        ParallelAxesError: secondary within PARALLEL_EPS radians of the
            primary axis, leaving the roll undetermined.
    """
    y = unit(np.asarray(primary, dtype=float))
    sec = np.asarray(secondary, dtype=float)
    ns = norm(sec)
    if ns <= EPS:
        raise DegenerateDirectionError("secondary axis is near zero")
    z_raw = sec - np.dot(sec, y) * y
    # |z_raw| / |sec| is the sine of the angle to the primary line
    if norm(z_raw) <= PARALLEL_EPS * ns:
        raise ParallelAxesError("secondary axis is parallel to primary")
    z = z_raw / norm(z_raw)
    x = np.cross(y, z)
    return np.column_stack([x, y, z])


def project_on_line(p: np.ndarray, origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Orthogonal projection of p onto the line origin + t * direction."""
    d = unit(np.asarray(direction, dtype=float))
    rel = np.asarray(p, dtype=float) - origin
    return origin + np.dot(rel, d) * d


# ===========================================================================
# rigid transforms
# ===========================================================================


@dataclass(eq=False)
class RigidTransform:
    """Rotation followed by translation: x -> R x + t."""

    rotation: np.ndarray  # unit quaternion [w, x, y, z]
    translation: np.ndarray  # (3,)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(quat_identity(), np.zeros(3))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_mat3(self.rotation)

    def apply(self, p: np.ndarray) -> np.ndarray:
        """Map a point (3,) or a batch of points (N, 3)."""
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            return quat_rotate(self.rotation, p) + self.translation
        return p @ self.rotation_matrix().T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self @ other)(x) = self(other(x))."""
        return RigidTransform(
            quat_normalize(quat_mul(self.rotation, other.rotation)),
            quat_rotate(self.rotation, other.translation) + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        qi = quat_conjugate(self.rotation)
        return RigidTransform(qi, -quat_rotate(qi, self.translation))
