/** Data model shared by the scene loader, the deformer and the session. */

import { RigidTransform, type Quat, type Vec3 } from "./math.js";

export interface Bone {
  name: string;
  parentIndex: number; // negative for the root
  restLocal: RigidTransform;
}

export interface Skeleton {
  bones: Bone[];
}

/** Rest-pose global transforms, accumulated root to leaf. */
export function restGlobals(skeleton: Skeleton): RigidTransform[] {
  const out: RigidTransform[] = [];
  for (const b of skeleton.bones) {
    if (b.parentIndex < 0) {
      out.push(b.restLocal);
    } else {
      out.push(out[b.parentIndex].compose(b.restLocal));
    }
  }
  return out;
}

export interface Track {
  boneIndex: number;
  times: Float64Array;
  rotations: Quat[];
  translations: Vec3[];
}

export interface AnimationClip {
  name: string;
  duration: number;
  loop: boolean;
  tracks: Track[];
}

export interface Pose {
  rotations: Quat[];
  translations: Vec3[];
}

export function identityPose(numBones: number): Pose {
  const rotations: Quat[] = [];
  const translations: Vec3[] = [];
  for (let i = 0; i < numBones; i++) {
    rotations.push([1, 0, 0, 0]);
    translations.push([0, 0, 0]);
  }
  return { rotations, translations };
}

/** Per-bone velocities in the global frame. Static bones hold exact zeros. */
export interface BoneKinematics {
  angular: Vec3[];
  linear: Vec3[];
}

export function zeroKinematics(numBones: number): BoneKinematics {
  const angular: Vec3[] = [];
  const linear: Vec3[] = [];
  for (let i = 0; i < numBones; i++) {
    angular.push([0, 0, 0]);
    linear.push([0, 0, 0]);
  }
  return { angular, linear };
}

export function scaleKinematics(kin: BoneKinematics, f: number): BoneKinematics {
  return {
    angular: kin.angular.map((v): Vec3 => [v[0] * f, v[1] * f, v[2] * f]),
    linear: kin.linear.map((v): Vec3 => [v[0] * f, v[1] * f, v[2] * f]),
  };
}

export function kinematicsAllZero(kin: BoneKinematics): boolean {
  for (const v of kin.angular) {
    if (v[0] !== 0 || v[1] !== 0 || v[2] !== 0) return false;
  }
  for (const v of kin.linear) {
    if (v[0] !== 0 || v[1] !== 0 || v[2] !== 0) return false;
  }
  return true;
}

export interface SkinnedMesh {
  restPositions: Float64Array; // 3 * numVertices, xyz interleaved
  numVertices: number;
  triangles: Int32Array; // 3 * numTriangles
  weights: [number, number][][]; // per vertex, sorted (bone, weight) pairs
}

/** Painted stiffness maps plus per-bone switches and gains. */
export interface VsParams {
  kSquash: Float64Array;
  kFloppy: Float64Array;
  squashOn: boolean[];
  floppyOn: boolean[];
  squashTranslationalGain: Float64Array;
  squashRotationalGain: Float64Array;
  floppyTranslationalGain: Float64Array;
  floppyRotationalGain: Float64Array;
  squashPointMode: boolean[];
  centroidOffsets: Vec3[]; // bone-local
  thetaMax: number | null;
}

export function defaultParams(numVertices: number, numBones: number): VsParams {
  return {
    kSquash: new Float64Array(numVertices),
    kFloppy: new Float64Array(numVertices),
    squashOn: new Array(numBones).fill(true),
    floppyOn: new Array(numBones).fill(true),
    squashTranslationalGain: new Float64Array(numBones).fill(1),
    squashRotationalGain: new Float64Array(numBones).fill(1),
    floppyTranslationalGain: new Float64Array(numBones).fill(1),
    floppyRotationalGain: new Float64Array(numBones).fill(1),
    squashPointMode: new Array(numBones).fill(false),
    centroidOffsets: Array.from({ length: numBones }, (): Vec3 => [0, 0, 0]),
    thetaMax: null,
  };
}

export function cloneParams(p: VsParams): VsParams {
  return {
    kSquash: p.kSquash.slice(),
    kFloppy: p.kFloppy.slice(),
    squashOn: p.squashOn.slice(),
    floppyOn: p.floppyOn.slice(),
    squashTranslationalGain: p.squashTranslationalGain.slice(),
    squashRotationalGain: p.squashRotationalGain.slice(),
    floppyTranslationalGain: p.floppyTranslationalGain.slice(),
    floppyRotationalGain: p.floppyRotationalGain.slice(),
    squashPointMode: p.squashPointMode.slice(),
    centroidOffsets: p.centroidOffsets.map((o): Vec3 => [o[0], o[1], o[2]]),
    thetaMax: p.thetaMax,
  };
}

/** Derived per-model quantities, either loaded or recomputed. */
export interface Precomputed {
  phi: Float64Array; // numVertices * numBones, row-major
  psi: Float64Array;
  masses: Float64Array;
  centroids: Vec3[];
}

export interface BoneGeometry {
  centroids: Vec3[];
  origins: Vec3[];
}

export interface SceneData {
  skeleton: Skeleton;
  mesh: SkinnedMesh;
  clips: AnimationClip[];
  vsParams: VsParams;
  precomputed: Precomputed | null;
  loadWarnings: string[];
}

export function findClip(scene: SceneData, name: string): AnimationClip {
  for (const c of scene.clips) {
    if (c.name === name) return c;
  }
  throw new Error(`no clip named ${JSON.stringify(name)}`);
}
