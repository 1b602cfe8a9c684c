/** Shared fixture plumbing for the test suite.
 *
 * The fixtures under tests/fixtures are produced by the reference
 * implementation (scripts/make_ui_fixtures.py at the repository root) and
 * are the authority the port is checked against. Regenerate them with
 * that script whenever the core math changes.
 */

import { readFileSync } from "node:fs";

import type { Quat, Vec3 } from "../src/engine/math.js";
import type { BoneKinematics, Pose } from "../src/engine/types.js";

export function fixtureText(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

export interface PoseDoc {
  rotations: number[][];
  translations: number[][];
}

export interface KinDoc {
  angular: number[][];
  linear: number[][];
}

export interface DeformCaseFx {
  name: string;
  pose: PoseDoc;
  kin: KinDoc;
  params: unknown;
  lbs_positions: number[][];
  displacements: number[][];
  max_bend_angle: number;
}

export interface StrokeFx {
  target: "k_squash" | "k_floppy";
  center: [number, number, number];
  radius: number;
  sign: 1 | -1;
  strength: number;
}

export interface ExpectationsFx {
  clip: string;
  num_vertices: number;
  num_bones: number;
  precompute: {
    phi: number[][];
    psi: number[][];
    masses: number[];
    centroids: number[][];
  };
  paint: { strokes: StrokeFx[]; clamp: [number, number] };
  clip_samples: { t: number; pose: PoseDoc; kin: KinDoc; lbs_positions: number[][] }[];
  deform_cases: DeformCaseFx[];
  trajectories: {
    pose: PoseDoc;
    kin: KinDoc;
    vertices: number[];
    samples: number;
    expected: number[][][];
  };
  posed_geometry: {
    pose: PoseDoc;
    offsets: number[][];
    centroids: number[][];
    origins: number[][];
  };
  bake: {
    params_file: string;
    fps: number;
    frame: number;
    t: number;
    positions: number[][];
  };
}

export const expectations = JSON.parse(fixtureText("expectations.json")) as ExpectationsFx;

export function poseFromDoc(doc: PoseDoc): Pose {
  return {
    rotations: doc.rotations.map((q) => [q[0], q[1], q[2], q[3]] as Quat),
    translations: doc.translations.map((x) => [x[0], x[1], x[2]] as Vec3),
  };
}

export function kinFromDoc(doc: KinDoc): BoneKinematics {
  return {
    angular: doc.angular.map((w) => [w[0], w[1], w[2]] as Vec3),
    linear: doc.linear.map((v) => [v[0], v[1], v[2]] as Vec3),
  };
}

export function flat(nested: number[][] | number[][][]): number[] {
  return nested.flat(2) as number[];
}

export function maxAbsDiff(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) {
    throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  }
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs(a[i] - b[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

/** True when the arrays are elementwise identical under ===, which treats
 * -0 and +0 as the same position. */
export function samePositions(a: ArrayLike<number>, b: ArrayLike<number>): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
