"""Clip sampling, forward kinematics and per-bone velocity extraction.

A pose stores each bone's animated local transform; the full local
transform of a bone is rest_local composed with the animated one, and
globals accumulate parent to child.

Velocities are per-bone motion relative to the immediate parent, expressed
in the global frame. They come either from finite differences between two
poses or from the exact derivative of the key interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyHistoryError, EmptyTrackError, NonPositiveDtError
from .geometry import (
    RigidTransform,
    quat_conjugate,
    quat_identity,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_rotation_vector,
    quat_slerp,
)
from .rig import Skeleton


@dataclass(eq=False)
class Track:
    """Keyframes for one bone. Times are seconds, strictly increasing."""

    bone_index: int
    times: np.ndarray  # (K,)
    rotations: np.ndarray  # (K, 4) unit quaternions [w, x, y, z]
    translations: np.ndarray  # (K, 3)


@dataclass(eq=False)
class AnimationClip:
    name: str
    duration: float
    loop: bool
    tracks: list[Track]

    def track_for(self, bone_index: int) -> Track | None:
        for tr in self.tracks:
            if tr.bone_index == bone_index:
                return tr
        return None


@dataclass(eq=False)
class Pose:
    """Animated local transforms for every bone."""

    rotations: np.ndarray  # (B, 4)
    translations: np.ndarray  # (B, 3)

    @staticmethod
    def identity(num_bones: int) -> "Pose":
        rot = np.zeros((num_bones, 4))
        rot[:, 0] = 1.0
        return Pose(rot, np.zeros((num_bones, 3)))

    def local(self, i: int) -> RigidTransform:
        return RigidTransform(self.rotations[i], self.translations[i])


@dataclass(eq=False)
class BoneKinematics:
    """Per-bone relative velocities in the global frame.

    angular[i] is the angular velocity of bone i about its own origin,
    relative to its parent; linear[i] is the velocity of the bone origin,
    also relative to the parent. Static bones hold exact zeros.
    """

    angular: np.ndarray  # (B, 3) rad/s
    linear: np.ndarray  # (B, 3) units/s

    @staticmethod
    def zeros(num_bones: int) -> "BoneKinematics":
        return BoneKinematics(np.zeros((num_bones, 3)), np.zeros((num_bones, 3)))

    def scaled(self, factor: float) -> "BoneKinematics":
        return BoneKinematics(self.angular * factor, self.linear * factor)


# ===========================================================================
# clip sampling
# ===========================================================================


def _clip_time(clip: AnimationClip, t: float) -> float:
    if clip.loop and clip.duration > 0.0:
        return float(t % clip.duration)
    return float(min(max(t, 0.0), clip.duration))


def _segment(times: np.ndarray, t: float) -> int:
    """Index k with times[k] <= t < times[k+1], clamped to valid segments."""
    k = int(np.searchsorted(times, t, side="right")) - 1
    return min(max(k, 0), len(times) - 2)


def evaluate_pose(clip: AnimationClip, skeleton: Skeleton, t: float) -> Pose:
    """Sample the clip at time t.

    Rotations take the shorter arc between keys, translations interpolate
    linearly. Time clamps to the clip range unless the clip loops. Bones
    without a track stay at identity.

    Raises:
        EmptyTrackError: a track holds no keys.
    """
    pose = Pose.identity(len(skeleton))
    tc = _clip_time(clip, t)
    for tr in clip.tracks:
        if len(tr.times) == 0:
            raise EmptyTrackError(f"bone {tr.bone_index} track has no keys")
        if len(tr.times) == 1 or tc <= tr.times[0]:
            q, x = tr.rotations[0], tr.translations[0]
        elif tc >= tr.times[-1]:
            q, x = tr.rotations[-1], tr.translations[-1]
        else:
            k = _segment(tr.times, tc)
            u = (tc - tr.times[k]) / (tr.times[k + 1] - tr.times[k])
            q = quat_slerp(tr.rotations[k], tr.rotations[k + 1], float(u))
            x = (1.0 - u) * tr.translations[k] + u * tr.translations[k + 1]
        pose.rotations[tr.bone_index] = quat_normalize(q)
        pose.translations[tr.bone_index] = x
    return pose


# ===========================================================================
# forward kinematics
# ===========================================================================


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> list[RigidTransform]:
    """Global transforms, parent composed before child.

    global_i = global_parent * rest_local_i * pose_local_i, with the root's
    parent taken as identity. The identity pose reproduces the rest globals.
    """
    out: list[RigidTransform] = []
    for i, bone in enumerate(skeleton.bones):
        rot = pose.rotations[i]
        # bones left at the identity keep their rest transform bit-exactly
        if (
            rot[0] == 1.0
            and not rot[1:].any()
            and not pose.translations[i].any()
        ):
            local = bone.rest_local
        else:
            local = bone.rest_local.compose(pose.local(i))
        if bone.parent_index < 0:
            out.append(local)
        else:
            out.append(out[bone.parent_index].compose(local))
    return out


# ===========================================================================
# velocities
# ===========================================================================


def _to_global(
    skeleton: Skeleton,
    globals_curr: list[RigidTransform],
    angular_parent: np.ndarray,
    linear_parent: np.ndarray,
) -> BoneKinematics:
    """Rotate per-bone parent-frame velocities into the global frame."""
    B = len(skeleton)
    out = BoneKinematics.zeros(B)
    for i, bone in enumerate(skeleton.bones):
        p = bone.parent_index
        if p < 0:
            out.angular[i] = angular_parent[i]
            out.linear[i] = linear_parent[i]
        else:
            q = globals_curr[p].rotation
            out.angular[i] = quat_rotate(q, angular_parent[i])
            out.linear[i] = quat_rotate(q, linear_parent[i])
    return out


def bone_velocities_finite_difference(
    skeleton: Skeleton, pose_prev: Pose, pose_curr: Pose, dt: float
) -> BoneKinematics:
    """Velocities from two nearby poses.

    The rotation rate comes from the relative quaternion of the composed
    local transforms, sign-corrected to the shorter arc, divided by dt.
    Identical poses give exact zeros.

    Raises:
        NonPositiveDtError: dt <= 0.
    """
    if dt <= 0.0:
        raise NonPositiveDtError(f"dt must be positive, got {dt}")
    B = len(skeleton)
    ang = np.zeros((B, 3))
    lin = np.zeros((B, 3))
    for i, bone in enumerate(skeleton.bones):
        prev = bone.rest_local.compose(pose_prev.local(i))
        curr = bone.rest_local.compose(pose_curr.local(i))
        delta = quat_mul(curr.rotation, quat_conjugate(prev.rotation))
        ang[i] = quat_rotation_vector(delta) / dt
        lin[i] = (curr.translation - prev.translation) / dt
    globals_curr = forward_kinematics(skeleton, pose_curr)
    return _to_global(skeleton, globals_curr, ang, lin)


def bone_velocities_analytic(
    clip: AnimationClip, skeleton: Skeleton, t: float
) -> BoneKinematics:
    """Exact clip derivative at time t.

    Within a key interval the rotation interpolation spins at a constant
    rate about a fixed axis and translations move linearly, so the
    derivative is piecewise constant. At a key time the right-hand segment
    wins; outside the key range (clamped clip) velocities are zero.
    """
    B = len(skeleton)
    ang = np.zeros((B, 3))
    lin = np.zeros((B, 3))
    tc = _clip_time(clip, t)
    for tr in clip.tracks:
        if len(tr.times) == 0:
            raise EmptyTrackError(f"bone {tr.bone_index} track has no keys")
        if len(tr.times) == 1 or tc < tr.times[0] or tc >= tr.times[-1]:
            continue
        k = _segment(tr.times, tc)
        span = float(tr.times[k + 1] - tr.times[k])
        delta = quat_mul(tr.rotations[k + 1], quat_conjugate(tr.rotations[k]))
        rest_q = skeleton.bones[tr.bone_index].rest_local.rotation
        ang[tr.bone_index] = quat_rotate(rest_q, quat_rotation_vector(delta)) / span
        lin[tr.bone_index] = quat_rotate(
            rest_q, tr.translations[k + 1] - tr.translations[k]
        ) / span
    pose = evaluate_pose(clip, skeleton, t)
    globals_curr = forward_kinematics(skeleton, pose)
    return _to_global(skeleton, globals_curr, ang, lin)


def smooth_velocities(history: list[BoneKinematics], window: int) -> BoneKinematics:
    """Component-wise mean of the last `window` entries.

    A window of 1 returns the newest entry unchanged. Histories shorter
    than the window average whatever exists.

    Raises:
        EmptyHistoryError: no entries to average.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if not history:
        raise EmptyHistoryError("cannot smooth an empty velocity history")
    tail = history[-window:]
    ang = np.mean([k.angular for k in tail], axis=0)
    lin = np.mean([k.linear for k in tail], axis=0)
    return BoneKinematics(ang, lin)
