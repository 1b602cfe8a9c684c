/** Narrow surface between the engine port and the UI layer.
 *
 * Everything the interface does with geometry goes through the five
 * functions here: loadScene, precomputeModel, deformMesh,
 * traceTrajectories, and posedBoneGeometry. UI code never computes
 * deformation on its own; it hands poses, velocities, and parameter sets
 * to this module and renders what comes back. Keeping the surface this
 * small makes it practical to swap the in-process engine for a worker or
 * a remote one without touching the interface code.
 */

import {
  phiSupport,
  weightsByBone,
  deformCore,
  posedBoneGeometryCore,
  DeformedFrame,
  type BoneSupport,
  type WeightsByBone,
} from "./engine/deform.js";
import { evaluatePose, forwardKinematics, fdVelocities } from "./engine/kinematics.js";
import { computePrecomputed, restGeometry } from "./engine/precompute.js";
import { parseSceneText } from "./engine/scene.js";
import type { Quat, RigidTransform, Vec3 } from "./engine/math.js";
import {
  findClip,
  restGlobals,
  scaleKinematics,
  zeroKinematics,
  type BoneKinematics,
  type Pose,
  type SceneData,
  type VsParams,
} from "./engine/types.js";

export const BINDING_VERSION = 1;

/** Scene plus the derived lookup tables deformation needs. */
export interface SceneModel {
  scene: SceneData;
  restG: RigidTransform[];
  byBone: WeightsByBone[];
  support: BoneSupport[] | null;
}

/** Where to evaluate: a time in a named clip, or an explicit pose. */
export type PoseRequest = { clip: string; t: number } | { pose: Pose };

export interface DeformRequest {
  at: PoseRequest;
  /** Explicit per-bone velocities; for a clip request the default is a
   * finite difference around t. */
  velocities?: BoneKinematics;
  params?: VsParams;
  fdStep?: number;
}

export interface TrajectoryRequest {
  at: PoseRequest;
  velocities?: BoneKinematics;
  params?: VsParams;
  vertices: number[];
  samples: number;
  fdStep?: number;
}

export interface PosedGeometry {
  centroids: Vec3[];
  origins: Vec3[];
  /** Global bone rotations, for mapping screen-space input into bone frames. */
  rotations: Quat[];
}

export function loadScene(text: string): SceneModel {
  const scene = parseSceneText(text);
  const byBone = weightsByBone(scene.mesh, scene.skeleton.bones.length);
  const support =
    scene.precomputed === null
      ? null
      : phiSupport(scene.precomputed.phi, scene.mesh.numVertices, scene.skeleton.bones.length);
  return { scene, restG: restGlobals(scene.skeleton), byBone, support };
}

/** Fill in masses, centroids, and the influence tables when the scene
 * file does not carry them. Idempotent. */
export function precomputeModel(model: SceneModel): void {
  if (model.scene.precomputed === null) {
    model.scene.precomputed = computePrecomputed(model.scene);
  }
  if (model.support === null) {
    model.support = phiSupport(
      model.scene.precomputed.phi,
      model.scene.mesh.numVertices,
      model.scene.skeleton.bones.length,
    );
  }
}

function ready(model: SceneModel): { support: BoneSupport[] } {
  restGeometry(model.scene);
  if (model.support === null) {
    throw new Error("scene has no precomputed data; run precompute first");
  }
  return { support: model.support };
}

function resolve(
  model: SceneModel,
  at: PoseRequest,
  velocities: BoneKinematics | undefined,
  fdStep: number | undefined,
): { pose: Pose; kin: BoneKinematics } {
  if ("pose" in at) {
    return {
      pose: at.pose,
      kin: velocities ?? zeroKinematics(model.scene.skeleton.bones.length),
    };
  }
  // t is passed through unclamped: pose evaluation clamps (or wraps) it
  // internally, and past the end of a non-looping clip the difference
  // stencil collapses so the velocities become exact zeros
  const clip = findClip(model.scene, at.clip);
  const pose = evaluatePose(clip, model.scene.skeleton, at.t);
  const kin =
    velocities ?? fdVelocities(clip, model.scene.skeleton, at.t, fdStep ?? 1e-3);
  return { pose, kin };
}

export function deformMesh(model: SceneModel, req: DeformRequest): DeformedFrame {
  const { support } = ready(model);
  const { pose, kin } = resolve(model, req.at, req.velocities, req.fdStep);
  return deformCore(
    model.scene.mesh,
    model.scene.skeleton,
    model.restG,
    model.byBone,
    pose,
    kin,
    support,
    req.params ?? model.scene.vsParams,
    restGeometry(model.scene),
  );
}

/** Per-vertex polylines showing where the listed vertices travel as the
 * velocity input ramps from zero to the requested magnitude. Sample j of
 * a polyline is the vertex deformed with velocities scaled by
 * j / (samples - 1). */
export function traceTrajectories(model: SceneModel, req: TrajectoryRequest): Vec3[][] {
  const { support } = ready(model);
  if (req.samples < 2) {
    throw new Error("trajectories need at least two samples");
  }
  const { pose, kin } = resolve(model, req.at, req.velocities, req.fdStep);
  const params = req.params ?? model.scene.vsParams;
  const geo = restGeometry(model.scene);
  const paths: Vec3[][] = req.vertices.map(() => []);
  for (let j = 0; j < req.samples; j++) {
    const lam = j === req.samples - 1 ? 1.0 : j * (1.0 / (req.samples - 1));
    const frame = deformCore(
      model.scene.mesh,
      model.scene.skeleton,
      model.restG,
      model.byBone,
      pose,
      scaleKinematics(kin, lam),
      support,
      params,
      geo,
    );
    const pos = frame.positions;
    for (let v = 0; v < req.vertices.length; v++) {
      const u = req.vertices[v];
      paths[v].push([pos[3 * u], pos[3 * u + 1], pos[3 * u + 2]]);
    }
  }
  return paths;
}

/** Bone positions in the requested pose: deformation centers (with the
 * given offsets applied in each bone's frame) and bone origins, plus the
 * global rotations for input mapping. */
export function posedBoneGeometry(
  model: SceneModel,
  at: PoseRequest,
  centroidOffsets: Vec3[] | null,
): PosedGeometry {
  const geo = restGeometry(model.scene);
  const { pose } = resolve(model, at, zeroKinematics(model.scene.skeleton.bones.length), undefined);
  const globalsPosed = forwardKinematics(model.scene.skeleton, pose);
  const { centroids, origins } = posedBoneGeometryCore(
    model.scene.skeleton,
    model.restG,
    globalsPosed,
    geo,
    centroidOffsets,
  );
  return {
    centroids,
    origins,
    rotations: globalsPosed.map((g) => [...g.rotation] as Quat),
  };
}
