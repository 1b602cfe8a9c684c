"""Linear blend skinning and the finite-difference vertex velocity oracle."""
from __future__ import annotations

import numpy as np

from .errors import NonPositiveDtError
from .geometry import RigidTransform
from .kinematics import AnimationClip, evaluate_pose, forward_kinematics
from .rig import Skeleton, SkinnedMesh


def skinning_matrices(
    skeleton: Skeleton,
    globals_posed: list[RigidTransform],
    globals_rest: list[RigidTransform] | None = None,
) -> list[RigidTransform]:
    """Per-bone rest-to-posed transforms: posed global composed with the
    inverse rest global. Identity pose gives exact identities."""
    if globals_rest is None:
        globals_rest = skeleton.rest_globals
    return [g.compose(r.inverse()) for g, r in zip(globals_posed, globals_rest)]


def lbs_deform(mesh: SkinnedMesh, matrices: list[RigidTransform]) -> np.ndarray:
    """(N, 3) blended vertex positions.

    Each vertex is the weight-blended image of its rest position under the
    bone transforms. Accumulation runs one vectorized pass per bone in
    ascending bone order, which fixes the per-vertex summation order and
    keeps repeated runs bit-identical.
    """
    out = np.zeros_like(mesh.rest_positions)
    for bone, (idx, w) in enumerate(mesh.weights_by_bone(len(matrices))):
        if len(idx) == 0:
            continue
        tr = matrices[bone]
        moved = mesh.rest_positions[idx] @ tr.rotation_matrix().T + tr.translation
        out[idx] += w[:, None] * moved
    return out


def pose_positions(mesh: SkinnedMesh, skeleton: Skeleton, pose) -> np.ndarray:
    """Convenience: forward kinematics plus skinning in one call."""
    globals_posed = forward_kinematics(skeleton, pose)
    return lbs_deform(mesh, skinning_matrices(skeleton, globals_posed))


def vertex_velocity_oracle(
    mesh: SkinnedMesh,
    skeleton: Skeleton,
    clip: AnimationClip,
    t: float,
    dt: float,
) -> np.ndarray:
    """(N, 3) forward-difference velocity of every skinned vertex.

    Runs the full pose-and-skin pipeline at t and t + dt and divides the
    position change by dt. Serves as the independent reference that the
    per-bone velocity decomposition is checked against.

    Raises:
        NonPositiveDtError: dt <= 0.
    """
    if dt <= 0.0:
        raise NonPositiveDtError(f"dt must be positive, got {dt}")
    p0 = pose_positions(mesh, skeleton, evaluate_pose(clip, skeleton, t))
    p1 = pose_positions(mesh, skeleton, evaluate_pose(clip, skeleton, t + dt))
    return (p1 - p0) / dt
