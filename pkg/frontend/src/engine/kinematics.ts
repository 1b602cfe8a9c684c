/** Clip sampling, forward kinematics and scrub velocities.
 *
 * Pose evaluation is a direct port of the reference: shorter-arc rotation
 * interpolation, linear translations, clamped (or wrapped) clip time, and
 * a bit-exact identity short-circuit in the kinematics chain so untouched
 * bones stay at their rest transform.
 *
 * Velocities for scrubbing come from a centered finite difference of the
 * neighboring evaluated poses. Within a key segment the interpolation
 * spins at a constant rate, so away from key times this agrees with the
 * exact clip derivative to roundoff; a static clip yields exact zeros.
 */

import { EmptyTrackError } from "./errors.js";
import {
  quatConjugate,
  quatMul,
  quatNormalize,
  quatRotate,
  quatRotationVector,
  quatSlerp,
  RigidTransform,
  type Quat,
  type Vec3,
} from "./math.js";
import {
  identityPose,
  zeroKinematics,
  type AnimationClip,
  type BoneKinematics,
  type Pose,
  type Skeleton,
  type Track,
} from "./types.js";

function clipTime(clip: AnimationClip, t: number): number {
  if (clip.loop && clip.duration > 0) {
    let r = t % clip.duration;
    if (r < 0) r += clip.duration;
    return r;
  }
  return Math.min(Math.max(t, 0), clip.duration);
}

/** Index k with times[k] <= t < times[k+1], clamped to valid segments. */
function segmentIndex(times: Float64Array, t: number): number {
  let k = 0;
  while (k < times.length - 2 && times[k + 1] <= t) k++;
  return k;
}

function sampleTrack(tr: Track, tc: number): { q: Quat; x: Vec3 } {
  if (tr.times.length === 0) {
    throw new EmptyTrackError(`bone ${tr.boneIndex} track has no keys`);
  }
  if (tr.times.length === 1 || tc <= tr.times[0]) {
    return { q: tr.rotations[0], x: tr.translations[0] };
  }
  if (tc >= tr.times[tr.times.length - 1]) {
    return {
      q: tr.rotations[tr.rotations.length - 1],
      x: tr.translations[tr.translations.length - 1],
    };
  }
  const k = segmentIndex(tr.times, tc);
  const u = (tc - tr.times[k]) / (tr.times[k + 1] - tr.times[k]);
  const q = quatSlerp(tr.rotations[k], tr.rotations[k + 1], u);
  const a = tr.translations[k];
  const b = tr.translations[k + 1];
  const x: Vec3 = [
    (1 - u) * a[0] + u * b[0],
    (1 - u) * a[1] + u * b[1],
    (1 - u) * a[2] + u * b[2],
  ];
  return { q, x };
}

export function evaluatePose(clip: AnimationClip, skeleton: Skeleton, t: number): Pose {
  const pose = identityPose(skeleton.bones.length);
  const tc = clipTime(clip, t);
  for (const tr of clip.tracks) {
    const { q, x } = sampleTrack(tr, tc);
    pose.rotations[tr.boneIndex] = quatNormalize(q);
    pose.translations[tr.boneIndex] = x;
  }
  return pose;
}

/** Global transforms, parent composed before child. */
export function forwardKinematics(skeleton: Skeleton, pose: Pose): RigidTransform[] {
  const out: RigidTransform[] = [];
  for (let i = 0; i < skeleton.bones.length; i++) {
    const bone = skeleton.bones[i];
    const r = pose.rotations[i];
    const x = pose.translations[i];
    let local: RigidTransform;
    // bones left at the identity keep their rest transform bit-exactly
    if (
      r[0] === 1 && r[1] === 0 && r[2] === 0 && r[3] === 0 &&
      x[0] === 0 && x[1] === 0 && x[2] === 0
    ) {
      local = bone.restLocal;
    } else {
      local = bone.restLocal.compose(new RigidTransform(r, x));
    }
    if (bone.parentIndex < 0) {
      out.push(local);
    } else {
      out.push(out[bone.parentIndex].compose(local));
    }
  }
  return out;
}

function toGlobal(
  skeleton: Skeleton,
  globalsCurr: RigidTransform[],
  angularParent: Vec3[],
  linearParent: Vec3[],
): BoneKinematics {
  const out = zeroKinematics(skeleton.bones.length);
  for (let i = 0; i < skeleton.bones.length; i++) {
    const p = skeleton.bones[i].parentIndex;
    if (p < 0) {
      out.angular[i] = angularParent[i];
      out.linear[i] = linearParent[i];
    } else {
      const q = globalsCurr[p].rotation;
      out.angular[i] = quatRotate(q, angularParent[i]);
      out.linear[i] = quatRotate(q, linearParent[i]);
    }
  }
  return out;
}

/** Scrub velocities: centered difference of the poses evaluated just
 * before and just after t, rotated into the global frame of the pose at
 * t itself. Identical neighboring poses give exact zeros. */
export function fdVelocities(
  clip: AnimationClip,
  skeleton: Skeleton,
  t: number,
  step = 1e-3,
): BoneKinematics {
  const B = skeleton.bones.length;
  let lo = t - step;
  let hi = t + step;
  let dt: number;
  if (clip.loop && clip.duration > 0) {
    dt = 2 * step;
  } else {
    lo = Math.min(Math.max(lo, 0), clip.duration);
    hi = Math.min(Math.max(hi, 0), clip.duration);
    dt = hi - lo;
  }
  if (dt <= 0) {
    return zeroKinematics(B);
  }
  const poseLo = evaluatePose(clip, skeleton, lo);
  const poseHi = evaluatePose(clip, skeleton, hi);
  const ang: Vec3[] = [];
  const lin: Vec3[] = [];
  for (let i = 0; i < B; i++) {
    const rest = skeleton.bones[i].restLocal;
    const prev = rest.compose(new RigidTransform(poseLo.rotations[i], poseLo.translations[i]));
    const curr = rest.compose(new RigidTransform(poseHi.rotations[i], poseHi.translations[i]));
    const delta = quatMul(curr.rotation, quatConjugate(prev.rotation));
    const rv = quatRotationVector(delta);
    ang.push([rv[0] / dt, rv[1] / dt, rv[2] / dt]);
    lin.push([
      (curr.translation[0] - prev.translation[0]) / dt,
      (curr.translation[1] - prev.translation[1]) / dt,
      (curr.translation[2] - prev.translation[2]) / dt,
    ]);
  }
  const globalsCurr = forwardKinematics(skeleton, evaluatePose(clip, skeleton, t));
  return toGlobal(skeleton, globalsCurr, ang, lin);
}
