"""Velocity-driven secondary deformation layered on blend skinning.

Every moving bone adds a closed-form displacement to each vertex it
influences, scaled by the subtree-propagated weight of that bone. Two
effect families exist, each applied separately to the translational and
the rotational part of the bone's velocity:

- squash: a volume-preserving anisotropic scale aligned with the motion
- floppy: a lag, either a translation opposite the motion or a backward
  bend about the bone's rotation axis

The evaluation is stateless: positions and bone velocities fully determine
the output frame.

deform_vertex is the readable per-vertex reference; deform_mesh is the
vectorized batch path used for baking and benchmarks. Both share the same
term-level algebra so they agree to within accumulation roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParallelAxesError
from .geometry import (
    EPS,
    frame_from_primary_secondary,
    norm,
    project_on_line,
)
from .kinematics import BoneKinematics, Pose, forward_kinematics
from .lbs import lbs_deform, skinning_matrices
from .rig import BoneGeometry, Skeleton, SkinnedMesh, posed_bone_geometry

# squash amounts are clamped above -1 so the scale factors stay finite
SQUASH_S_FLOOR = -1.0 + 1e-6


@dataclass(eq=False)
class VsParams:
    """Per-vertex stiffness maps plus per-bone switches and gains.

    k_squash / k_floppy are painted per vertex. Each bone can turn an
    effect family off entirely and rebalance its translational and
    rotational channels with gain factors that multiply the painted
    stiffness. theta_max, when set, caps the floppy bend angle.
    """

    k_squash: np.ndarray  # (N,)
    k_floppy: np.ndarray  # (N,)
    squash_on: np.ndarray  # (B,) bool
    floppy_on: np.ndarray  # (B,) bool
    squash_translational_gain: np.ndarray  # (B,)
    squash_rotational_gain: np.ndarray  # (B,)
    floppy_translational_gain: np.ndarray  # (B,)
    floppy_rotational_gain: np.ndarray  # (B,)
    squash_point_mode: np.ndarray  # (B,) bool, True squashes about the centroid point
    centroid_offsets: np.ndarray  # (B, 3) in bone-local frame
    theta_max: float | None = None

    @staticmethod
    def defaults(num_vertices: int, num_bones: int) -> "VsParams":
        return VsParams(
            k_squash=np.zeros(num_vertices),
            k_floppy=np.zeros(num_vertices),
            squash_on=np.ones(num_bones, dtype=bool),
            floppy_on=np.ones(num_bones, dtype=bool),
            squash_translational_gain=np.ones(num_bones),
            squash_rotational_gain=np.ones(num_bones),
            floppy_translational_gain=np.ones(num_bones),
            floppy_rotational_gain=np.ones(num_bones),
            squash_point_mode=np.zeros(num_bones, dtype=bool),
            centroid_offsets=np.zeros((num_bones, 3)),
            theta_max=None,
        )


@dataclass(eq=False)
class VelocityComponent:
    """Velocity a bone imparts at one vertex position, split into the part
    from the bone's spin and the part from its origin translation."""

    rotational: np.ndarray  # (3,)
    translational: np.ndarray  # (3,)


@dataclass(eq=False)
class DeformedFrame:
    lbs_positions: np.ndarray  # (N, 3)
    displacements: np.ndarray  # (N, 3)
    max_bend_angle: float  # largest |floppy bend| applied anywhere this frame

    @property
    def positions(self) -> np.ndarray:
        return self.lbs_positions + self.displacements


# ===========================================================================
# scale matrices (exported for the volume checks)
# ===========================================================================


def squash_scale_translational(s: float) -> np.ndarray:
    """Stretch 1+s along x, shrink both transverse axes to keep volume."""
    c = 1.0 / np.sqrt(1.0 + s)
    return np.diag([1.0 + s, c, c])


def squash_scale_rotational(s: float) -> np.ndarray:
    """Stretch 1+s along x, keep the medial axis y, shrink z to compensate."""
    return np.diag([1.0 + s, 1.0, 1.0 / (1.0 + s)])


# ===========================================================================
# per-vertex reference ops
# ===========================================================================


def velocity_component(
    p: np.ndarray, origin: np.ndarray, omega: np.ndarray, linear: np.ndarray
) -> VelocityComponent:
    """Split a bone's motion into what it does at point p.

    The spin contributes omega x (p - origin); the origin translation
    contributes itself, identical for every vertex.
    """
    return VelocityComponent(
        rotational=np.cross(omega, p - origin),
        translational=np.asarray(linear, dtype=float),
    )


def _directional_squash(r: np.ndarray, direction: np.ndarray, s: float) -> np.ndarray:
    """Displacement of the volume-preserving squash along a unit direction.

    Algebraically (R S R^T - I) r for the three-axis scale, written in the
    factored form so s = 0 gives an exact zero.
    """
    s = max(s, SQUASH_S_FLOOR)
    along = float(np.dot(direction, r))
    c = 1.0 / np.sqrt(1.0 + s) - 1.0
    return (s * along) * direction + c * (r - along * direction)


def squash_translational(
    p: np.ndarray, centroid: np.ndarray, v_tr: np.ndarray, k: float
) -> np.ndarray:
    """Stretch the bone's region about its centroid along the direction of
    travel, shrinking the cross section to preserve volume.

    The amount is s = k * |v_tr|. Velocities at or below EPS contribute
    nothing.
    """
    speed = norm(v_tr)
    if speed <= EPS or k == 0.0:
        return np.zeros(3)
    return _directional_squash(p - centroid, v_tr / speed, k * speed)


def squash_rotational(
    p: np.ndarray,
    centroid: np.ndarray,
    origin: np.ndarray,
    omega: np.ndarray,
    k: float,
    point_mode: bool = False,
) -> np.ndarray:
    """Squash driven by the bone's spin.

    In axis mode the scale stretches perpendicular to the medial axis (the
    origin-to-centroid segment), keeps the medial axis itself, and shrinks
    along the third direction chosen as close as possible to omega. The
    amount s = k * |omega x (p - origin)| grows with the local spin speed.

    Point mode, or any degeneracy of the axis construction, falls back to
    the volume-preserving point squash about the centroid, directed along
    omega x (centroid - origin) when that is usable and along the vertex's
    own rotational velocity otherwise.
    """
    speed = norm(omega)
    if speed <= EPS or k == 0.0:
        return np.zeros(3)
    v_rot = np.cross(omega, p - origin)
    s = k * norm(v_rot)
    medial = centroid - origin
    if not point_mode and norm(medial) > EPS:
        try:
            frame = frame_from_primary_secondary(medial, omega)
        except ParallelAxesError:
            return np.zeros(3)
        s = max(s, SQUASH_S_FLOOR)
        r = p - project_on_line(p, origin, medial)
        x, z = frame[:, 0], frame[:, 2]
        return (s * np.dot(x, r)) * x + (1.0 / (1.0 + s) - 1.0) * np.dot(z, r) * z
    g = np.cross(omega, medial)
    if norm(g) > EPS:
        direction = g / norm(g)
    elif norm(v_rot) > EPS:
        direction = v_rot / norm(v_rot)
    else:
        return np.zeros(3)
    return _directional_squash(p - centroid, direction, s)


def floppy_translational(v_tr: np.ndarray, k: float) -> np.ndarray:
    """Lag opposite the bone's travel: -k * v_tr."""
    if norm(v_tr) <= EPS:
        return np.zeros(3)
    return -k * np.asarray(v_tr, dtype=float)


def bend_angle(k: float, v_rot_norm: float, theta_max: float | None) -> float:
    """Floppy bend angle -k * |v_rot|, clamped into [-theta_max, theta_max]."""
    theta = -k * v_rot_norm
    if theta_max is not None:
        theta = float(np.clip(theta, -theta_max, theta_max))
    return theta


def floppy_rotational(
    p: np.ndarray,
    origin: np.ndarray,
    omega: np.ndarray,
    k: float,
    theta_max: float | None = None,
) -> np.ndarray:
    """Bend the vertex backward about the bone's rotation axis.

    The axis passes through the bone origin along omega. The vertex swings
    by theta = -k * |omega x (p - origin)| about that axis, so the distance
    to the axis is preserved exactly (the motion is a rotation).
    """
    speed = norm(omega)
    if speed <= EPS:
        return np.zeros(3)
    r = p - origin
    theta = bend_angle(k, norm(np.cross(omega, r)), theta_max)
    if theta == 0.0:
        return np.zeros(3)
    n = omega / speed
    r_perp = r - float(np.dot(r, n)) * n
    return (np.cos(theta) - 1.0) * r_perp + np.sin(theta) * np.cross(n, r_perp)


def deform_vertex(
    vertex_index: int,
    p: np.ndarray,
    phi_row: np.ndarray,
    components: list[VelocityComponent],
    kin: BoneKinematics,
    geometry: BoneGeometry,
    params: VsParams,
) -> np.ndarray:
    """Total secondary displacement of one vertex: the propagated-weight
    blend of every bone's enabled effect terms.

    Reference implementation; deform_mesh computes the same sum batched.
    """
    d = np.zeros(3)
    ks = float(params.k_squash[vertex_index])
    kf = float(params.k_floppy[vertex_index])
    for i in range(len(phi_row)):
        phi = float(phi_row[i])
        if phi <= EPS:
            continue
        comp = components[i]
        omega = kin.angular[i]
        if params.squash_on[i]:
            d = d + phi * squash_translational(
                p,
                geometry.centroids[i],
                comp.translational,
                ks * float(params.squash_translational_gain[i]),
            )
            d = d + phi * squash_rotational(
                p,
                geometry.centroids[i],
                geometry.origins[i],
                omega,
                ks * float(params.squash_rotational_gain[i]),
                point_mode=bool(params.squash_point_mode[i]),
            )
        if params.floppy_on[i]:
            d = d + phi * floppy_translational(
                comp.translational, kf * float(params.floppy_translational_gain[i])
            )
            d = d + phi * floppy_rotational(
                p,
                geometry.origins[i],
                omega,
                kf * float(params.floppy_rotational_gain[i]),
                params.theta_max,
            )
    return d


# ===========================================================================
# batched evaluation
# ===========================================================================


def phi_support(phi: np.ndarray, eps: float = EPS) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-bone (vertex_indices, phi_values) for entries above eps.

    Computed once per model; per-frame evaluation then touches only the
    vertices a bone can actually move.
    """
    out = []
    for col in phi.T:
        idx = np.nonzero(col > eps)[0]
        out.append((idx, col[idx]))
    return out


def _cross_rows(w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """w x r for a fixed (3,) w against each row of (n, 3) r."""
    out = np.empty_like(r)
    out[:, 0] = w[1] * r[:, 2] - w[2] * r[:, 1]
    out[:, 1] = w[2] * r[:, 0] - w[0] * r[:, 2]
    out[:, 2] = w[0] * r[:, 1] - w[1] * r[:, 0]
    return out


def _directional_squash_rows(
    r: np.ndarray, direction: np.ndarray, s: np.ndarray
) -> np.ndarray:
    """Batched _directional_squash with a per-row amount s.

    Expanded as ((s - c) * along) * direction + c * r with
    c = 1/sqrt(1+s) - 1, which is the same sum with one fewer pass.
    """
    s = np.maximum(s, SQUASH_S_FLOOR)
    along = r @ direction
    c = 1.0 / np.sqrt(1.0 + s) - 1.0
    return ((s - c) * along)[:, None] * direction + c[:, None] * r


def deform_mesh(
    mesh: SkinnedMesh,
    skeleton: Skeleton,
    pose: Pose,
    kin: BoneKinematics,
    phi: np.ndarray,
    params: VsParams,
    rest_geometry: BoneGeometry,
    support: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> DeformedFrame:
    """Skin the mesh and add every bone's velocity-driven displacement.

    Bones are processed in ascending index order with one vectorized pass
    over the vertices whose propagated weight is nonzero, so the summation
    order per vertex is fixed and runs reproduce bit-identically. Bones
    with both effects off, or with velocities at or below EPS, are skipped
    and contribute exactly nothing.
    """
    globals_posed = forward_kinematics(skeleton, pose)
    p = lbs_deform(mesh, skinning_matrices(skeleton, globals_posed))
    geometry = posed_bone_geometry(
        skeleton, globals_posed, rest_geometry, params.centroid_offsets
    )
    if support is None:
        support = phi_support(phi)
    d = np.zeros_like(p)
    max_bend = 0.0
    for i in range(len(skeleton)):
        squash = bool(params.squash_on[i])
        floppy = bool(params.floppy_on[i])
        if not (squash or floppy):
            continue
        omega = kin.angular[i]
        vel = kin.linear[i]
        spin = norm(omega)
        speed = norm(vel)
        if spin <= EPS and speed <= EPS:
            continue
        idx, phi_vals = support[i]
        if len(idx) == 0:
            continue
        pb = p[idx]
        accum = np.zeros_like(pb)
        ks = params.k_squash[idx] if squash else None
        kf = params.k_floppy[idx] if floppy else None
        if speed > EPS:
            if squash:
                accum += _directional_squash_rows(
                    pb - geometry.centroids[i],
                    vel / speed,
                    ks * float(params.squash_translational_gain[i]) * speed,
                )
            if floppy:
                accum += np.outer(
                    -kf * float(params.floppy_translational_gain[i]), vel
                )
        if spin > EPS:
            r = pb - geometry.origins[i]
            vr = _cross_rows(omega, r)
            vr_norm = np.sqrt(np.einsum("ij,ij->i", vr, vr))
            if squash:
                accum += _rotational_squash_rows(
                    pb, r, vr, vr_norm, omega, i, geometry, params, idx, ks
                )
            if floppy:
                theta = bend_angle_rows(
                    kf * float(params.floppy_rotational_gain[i]),
                    vr_norm,
                    params.theta_max,
                )
                if len(theta):
                    max_bend = max(max_bend, float(np.max(np.abs(theta))))
                n = omega / spin
                r_perp = r - np.outer(r @ n, n)
                # n x r_perp equals (omega x r) / |omega|: the axial part of
                # r drops out of the cross product
                accum += (np.cos(theta) - 1.0)[:, None] * r_perp + (
                    np.sin(theta) / spin
                )[:, None] * vr
        d[idx] += phi_vals[:, None] * accum
    return DeformedFrame(lbs_positions=p, displacements=d, max_bend_angle=max_bend)


def bend_angle_rows(
    k: np.ndarray, v_rot_norm: np.ndarray, theta_max: float | None
) -> np.ndarray:
    """Batched bend_angle; the clamp hits the bound exactly."""
    theta = -k * v_rot_norm
    if theta_max is not None:
        theta = np.clip(theta, -theta_max, theta_max)
    return theta


def _rotational_squash_rows(
    pb: np.ndarray,
    rel: np.ndarray,
    vr: np.ndarray,
    vr_norm: np.ndarray,
    omega: np.ndarray,
    bone: int,
    geometry: BoneGeometry,
    params: VsParams,
    idx: np.ndarray,
    ks: np.ndarray,
) -> np.ndarray:
    """Batched squash_rotational for one bone, mirroring its mode fallbacks.

    rel is pb minus the bone origin and ks is k_squash[idx], both already
    computed by the caller.
    """
    s = ks * float(params.squash_rotational_gain[bone]) * vr_norm
    centroid = geometry.centroids[bone]
    origin = geometry.origins[bone]
    medial = centroid - origin
    if not params.squash_point_mode[bone] and norm(medial) > EPS:
        try:
            frame = frame_from_primary_secondary(medial, omega)
        except ParallelAxesError:
            return np.zeros_like(pb)
        s = np.maximum(s, SQUASH_S_FLOOR)
        x, z = frame[:, 0], frame[:, 2]
        # x and z are perpendicular to the medial axis, so projecting rel
        # onto the cross-section plane first would not change these dots
        return (s * (rel @ x))[:, None] * x + ((1.0 / (1.0 + s) - 1.0) * (rel @ z))[
            :, None
        ] * z
    g = np.cross(omega, medial)
    if norm(g) > EPS:
        return _directional_squash_rows(pb - centroid, g / norm(g), s)
    # fully degenerate axis: squash each row along its own rotational velocity
    safe = np.where(vr_norm > EPS, vr_norm, 1.0)
    directions = np.where((vr_norm > EPS)[:, None], vr / safe[:, None], 0.0)
    r = pb - centroid
    s = np.maximum(s, SQUASH_S_FLOOR)
    along = np.einsum("ij,ij->i", directions, r)
    c = 1.0 / np.sqrt(1.0 + s) - 1.0
    zero = vr_norm <= EPS
    out = ((s - c) * along)[:, None] * directions + c[:, None] * r
    out[zero] = 0.0
    return out


def trace_trajectories(
    mesh: SkinnedMesh,
    skeleton: Skeleton,
    pose: Pose,
    kin: BoneKinematics,
    phi: np.ndarray,
    params: VsParams,
    rest_geometry: BoneGeometry,
    vertex_indices: np.ndarray,
    samples: int = 10,
) -> np.ndarray:
    """(V, samples, 3) paths of chosen vertices as the bone velocities ramp
    from zero to their full value.

    Each polyline starts at the plain skinned position and ends at the full
    secondary deformation, which visualizes where the effects will carry a
    vertex before committing to stiffness values.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    vertex_indices = np.asarray(vertex_indices, dtype=np.intp)
    out = np.empty((len(vertex_indices), samples, 3))
    support = phi_support(phi)
    for j, lam in enumerate(np.linspace(0.0, 1.0, samples)):
        frame = deform_mesh(
            mesh, skeleton, pose, kin.scaled(float(lam)), phi, params,
            rest_geometry, support,
        )
        out[:, j] = frame.positions[vertex_indices]
    return out
