/** Blend skinning plus the velocity-driven secondary displacement.
 *
 * This is a faithful port of the reference's batched evaluator, scalarized
 * per vertex. Bones are processed in ascending index order, effect terms
 * are added in the same sequence (translational squash, translational lag,
 * rotational squash, rotational lag) and every arithmetic expression keeps
 * the reference's association, so outputs agree to accumulation roundoff
 * and the exact-zero identities carry over: zero velocities or zero gains
 * leave the skinned positions untouched, bitwise.
 */

import { ParallelAxesError } from "./errors.js";
import {
  EPS,
  frameFromPrimarySecondary,
  quatToMat3,
  RigidTransform,
  type Vec3,
} from "./math.js";
import { forwardKinematics } from "./kinematics.js";
import {
  restGlobals,
  type BoneGeometry,
  type BoneKinematics,
  type Pose,
  type Skeleton,
  type SkinnedMesh,
  type VsParams,
} from "./types.js";

// squash amounts are clamped above -1 so the scale factors stay finite
export const SQUASH_S_FLOOR = -1.0 + 1e-6;

export interface BoneSupport {
  idx: Int32Array;
  phi: Float64Array;
}

/** Per-bone vertex lists with propagated weight above EPS. */
export function phiSupport(phi: Float64Array, numVertices: number, numBones: number): BoneSupport[] {
  const out: BoneSupport[] = [];
  for (let i = 0; i < numBones; i++) {
    const idx: number[] = [];
    const vals: number[] = [];
    for (let u = 0; u < numVertices; u++) {
      const v = phi[u * numBones + i];
      if (v > EPS) {
        idx.push(u);
        vals.push(v);
      }
    }
    out.push({ idx: Int32Array.from(idx), phi: Float64Array.from(vals) });
  }
  return out;
}

export interface WeightsByBone {
  idx: Int32Array;
  w: Float64Array;
}

export function weightsByBone(mesh: SkinnedMesh, numBones: number): WeightsByBone[] {
  const idx: number[][] = Array.from({ length: numBones }, () => []);
  const w: number[][] = Array.from({ length: numBones }, () => []);
  for (let u = 0; u < mesh.numVertices; u++) {
    for (const [bone, val] of mesh.weights[u]) {
      idx[bone].push(u);
      w[bone].push(val);
    }
  }
  return idx.map((v, i) => ({ idx: Int32Array.from(v), w: Float64Array.from(w[i]) }));
}

/** Per-bone rest-to-posed transforms. Identity pose gives exact identities. */
export function skinningMatrices(
  globalsPosed: RigidTransform[],
  globalsRest: RigidTransform[],
): RigidTransform[] {
  return globalsPosed.map((g, i) => g.compose(globalsRest[i].inverse()));
}

/** Blended vertex positions, one vectorized pass per bone in ascending
 * order so the per-vertex summation order is fixed. */
export function lbsDeform(
  mesh: SkinnedMesh,
  byBone: WeightsByBone[],
  matrices: RigidTransform[],
): Float64Array {
  const out = new Float64Array(mesh.numVertices * 3);
  const p = mesh.restPositions;
  for (let bone = 0; bone < byBone.length; bone++) {
    const { idx, w } = byBone[bone];
    if (idx.length === 0) continue;
    const R = quatToMat3(matrices[bone].rotation);
    const t = matrices[bone].translation;
    for (let k = 0; k < idx.length; k++) {
      const u = idx[k];
      const px = p[3 * u], py = p[3 * u + 1], pz = p[3 * u + 2];
      const mx = px * R[0] + py * R[1] + pz * R[2] + t[0];
      const my = px * R[3] + py * R[4] + pz * R[5] + t[1];
      const mz = px * R[6] + py * R[7] + pz * R[8] + t[2];
      out[3 * u] += w[k] * mx;
      out[3 * u + 1] += w[k] * my;
      out[3 * u + 2] += w[k] * mz;
    }
  }
  return out;
}

/** Map rest centroids and origins rigidly into the current pose. Artist
 * offsets are bone-local and applied before mapping so they follow the
 * bone. */
export function posedBoneGeometryCore(
  skeleton: Skeleton,
  globalsRest: RigidTransform[],
  globalsPosed: RigidTransform[],
  restGeometry: BoneGeometry,
  centroidOffsets: Vec3[] | null,
): BoneGeometry {
  const centroids: Vec3[] = [];
  const origins: Vec3[] = [];
  for (let i = 0; i < skeleton.bones.length; i++) {
    const g = globalsPosed[i];
    let localC = globalsRest[i].inverse().apply(restGeometry.centroids[i]);
    if (centroidOffsets !== null) {
      const o = centroidOffsets[i];
      localC = [localC[0] + o[0], localC[1] + o[1], localC[2] + o[2]];
    }
    centroids.push(g.apply(localC));
    origins.push([g.translation[0], g.translation[1], g.translation[2]]);
  }
  return { centroids, origins };
}

export class DeformedFrame {
  private cachedPositions: Float64Array | null = null;

  constructor(
    public lbsPositions: Float64Array,
    public displacements: Float64Array,
    public maxBendAngle: number,
  ) {}

  get positions(): Float64Array {
    if (this.cachedPositions === null) {
      const out = new Float64Array(this.lbsPositions.length);
      for (let i = 0; i < out.length; i++) {
        out[i] = this.lbsPositions[i] + this.displacements[i];
      }
      this.cachedPositions = out;
    }
    return this.cachedPositions;
  }
}

/** Skin the mesh and add every bone's velocity-driven displacement. */
export function deformCore(
  mesh: SkinnedMesh,
  skeleton: Skeleton,
  globalsRest: RigidTransform[],
  byBone: WeightsByBone[],
  pose: Pose,
  kin: BoneKinematics,
  support: BoneSupport[],
  params: VsParams,
  restGeo: BoneGeometry,
): DeformedFrame {
  const globalsPosed = forwardKinematics(skeleton, pose);
  const p = lbsDeform(mesh, byBone, skinningMatrices(globalsPosed, globalsRest));
  const geometry = posedBoneGeometryCore(
    skeleton, globalsRest, globalsPosed, restGeo, params.centroidOffsets,
  );
  const d = new Float64Array(p.length);
  let maxBend = 0;
  const thetaMax = params.thetaMax;

  for (let i = 0; i < skeleton.bones.length; i++) {
    const squash = params.squashOn[i];
    const floppy = params.floppyOn[i];
    if (!squash && !floppy) continue;
    const omega = kin.angular[i];
    const vel = kin.linear[i];
    const spin = Math.sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
    const speed = Math.sqrt(vel[0] * vel[0] + vel[1] * vel[1] + vel[2] * vel[2]);
    if (spin <= EPS && speed <= EPS) continue;
    const { idx, phi } = support[i];
    if (idx.length === 0) continue;

    const centroid = geometry.centroids[i];
    const origin = geometry.origins[i];
    const gainST = params.squashTranslationalGain[i];
    const gainSR = params.squashRotationalGain[i];
    const gainFT = params.floppyTranslationalGain[i];
    const gainFR = params.floppyRotationalGain[i];

    // cross-section frame for the axis-mode rotational squash, resolved
    // once per bone; parallel axes silently disable that term
    let axisFrame: { x: Vec3; z: Vec3 } | null = null;
    let pointDirection: Vec3 | null = null;
    let perRowDirection = false;
    const medial: Vec3 = [
      centroid[0] - origin[0],
      centroid[1] - origin[1],
      centroid[2] - origin[2],
    ];
    const medialNorm = Math.sqrt(
      medial[0] * medial[0] + medial[1] * medial[1] + medial[2] * medial[2],
    );
    if (squash && spin > EPS) {
      if (!params.squashPointMode[i] && medialNorm > EPS) {
        try {
          const f = frameFromPrimarySecondary(medial, omega);
          axisFrame = { x: f.x, z: f.z };
        } catch (e) {
          if (!(e instanceof ParallelAxesError)) throw e;
        }
      } else {
        const gx = omega[1] * medial[2] - omega[2] * medial[1];
        const gy = omega[2] * medial[0] - omega[0] * medial[2];
        const gz = omega[0] * medial[1] - omega[1] * medial[0];
        const gn = Math.sqrt(gx * gx + gy * gy + gz * gz);
        if (gn > EPS) {
          pointDirection = [gx / gn, gy / gn, gz / gn];
        } else {
          perRowDirection = true;
        }
      }
    }
    const usePointFallback = squash && spin > EPS &&
      (params.squashPointMode[i] || !(medialNorm > EPS));

    const dirTx = speed > EPS ? vel[0] / speed : 0;
    const dirTy = speed > EPS ? vel[1] / speed : 0;
    const dirTz = speed > EPS ? vel[2] / speed : 0;
    const nx = spin > EPS ? omega[0] / spin : 0;
    const ny = spin > EPS ? omega[1] / spin : 0;
    const nz = spin > EPS ? omega[2] / spin : 0;

    for (let k = 0; k < idx.length; k++) {
      const u = idx[k];
      const pbx = p[3 * u], pby = p[3 * u + 1], pbz = p[3 * u + 2];
      const ks = params.kSquash[u];
      const kf = params.kFloppy[u];
      let ax = 0, ay = 0, az = 0;

      if (speed > EPS) {
        if (squash) {
          const rx = pbx - centroid[0], ry = pby - centroid[1], rz = pbz - centroid[2];
          let s = ks * gainST * speed;
          if (s < SQUASH_S_FLOOR) s = SQUASH_S_FLOOR;
          const along = rx * dirTx + ry * dirTy + rz * dirTz;
          const c = 1.0 / Math.sqrt(1.0 + s) - 1.0;
          const m = (s - c) * along;
          ax += m * dirTx + c * rx;
          ay += m * dirTy + c * ry;
          az += m * dirTz + c * rz;
        }
        if (floppy) {
          const cf = -kf * gainFT;
          ax += cf * vel[0];
          ay += cf * vel[1];
          az += cf * vel[2];
        }
      }

      if (spin > EPS) {
        const rx = pbx - origin[0], ry = pby - origin[1], rz = pbz - origin[2];
        const vrx = omega[1] * rz - omega[2] * ry;
        const vry = omega[2] * rx - omega[0] * rz;
        const vrz = omega[0] * ry - omega[1] * rx;
        const vrNorm = Math.sqrt(vrx * vrx + vry * vry + vrz * vrz);

        if (squash) {
          if (axisFrame !== null) {
            let s = ks * gainSR * vrNorm;
            if (s < SQUASH_S_FLOOR) s = SQUASH_S_FLOOR;
            const x = axisFrame.x, z = axisFrame.z;
            const m1 = s * (rx * x[0] + ry * x[1] + rz * x[2]);
            const m2 = (1.0 / (1.0 + s) - 1.0) * (rx * z[0] + ry * z[1] + rz * z[2]);
            ax += m1 * x[0] + m2 * z[0];
            ay += m1 * x[1] + m2 * z[1];
            az += m1 * x[2] + m2 * z[2];
          } else if (usePointFallback) {
            let dx: number, dy: number, dz: number;
            let rowLive = true;
            if (pointDirection !== null) {
              dx = pointDirection[0]; dy = pointDirection[1]; dz = pointDirection[2];
            } else if (perRowDirection && vrNorm > EPS) {
              dx = vrx / vrNorm; dy = vry / vrNorm; dz = vrz / vrNorm;
            } else {
              dx = 0; dy = 0; dz = 0;
              rowLive = false;
            }
            if (rowLive) {
              const cx = pbx - centroid[0], cy = pby - centroid[1], cz = pbz - centroid[2];
              let s = ks * gainSR * vrNorm;
              if (s < SQUASH_S_FLOOR) s = SQUASH_S_FLOOR;
              const along = dx * cx + dy * cy + dz * cz;
              const c = 1.0 / Math.sqrt(1.0 + s) - 1.0;
              const m = (s - c) * along;
              ax += m * dx + c * cx;
              ay += m * dy + c * cy;
              az += m * dz + c * cz;
            }
          }
          // axis mode with a parallel spin axis adds nothing
        }

        if (floppy) {
          let theta = -(kf * gainFR) * vrNorm;
          if (thetaMax !== null) {
            theta = Math.min(Math.max(theta, -thetaMax), thetaMax);
          }
          const absTheta = Math.abs(theta);
          if (absTheta > maxBend) maxBend = absTheta;
          const rdn = rx * nx + ry * ny + rz * nz;
          const rpx = rx - rdn * nx;
          const rpy = ry - rdn * ny;
          const rpz = rz - rdn * nz;
          const m1 = Math.cos(theta) - 1.0;
          const m2 = Math.sin(theta) / spin;
          ax += m1 * rpx + m2 * vrx;
          ay += m1 * rpy + m2 * vry;
          az += m1 * rpz + m2 * vrz;
        }
      }

      d[3 * u] += phi[k] * ax;
      d[3 * u + 1] += phi[k] * ay;
      d[3 * u + 2] += phi[k] * az;
    }
  }
  return new DeformedFrame(p, d, maxBend);
}

export function restGlobalsOf(skeleton: Skeleton): RigidTransform[] {
  return restGlobals(skeleton);
}
