/** Rest-state precompute: propagated weights, surface masses, centroids.
 *
 * Accumulation orders are kept identical to the reference (column-wise
 * hierarchy passes, corner-major mass scatter) so recomputed values agree
 * with stored ones down to summation roundoff.
 */

import { EPS, type Vec3 } from "./math.js";
import { restGlobals, type BoneGeometry, type Precomputed, type SceneData, type Skeleton, type SkinnedMesh } from "./types.js";

export function denseWeights(mesh: SkinnedMesh, numBones: number): Float64Array {
  const w = new Float64Array(mesh.numVertices * numBones);
  for (let u = 0; u < mesh.numVertices; u++) {
    for (const [bone, val] of mesh.weights[u]) {
      w[u * numBones + bone] += val;
    }
  }
  return w;
}

/** Subtree-accumulated weights: entry [u, i] sums vertex u's weights over
 * bone i and every descendant. For normalized weights the root column is
 * exactly 1. */
export function propagateWeightsUpward(mesh: SkinnedMesh, skeleton: Skeleton): Float64Array {
  const B = skeleton.bones.length;
  const phi = denseWeights(mesh, B);
  for (let i = B - 1; i >= 0; i--) {
    const p = skeleton.bones[i].parentIndex;
    if (p >= 0) {
      for (let u = 0; u < mesh.numVertices; u++) {
        phi[u * B + p] += phi[u * B + i];
      }
    }
  }
  return phi;
}

/** Ancestor-accumulated weights, used to place bone centroids. */
export function propagateWeightsDownward(mesh: SkinnedMesh, skeleton: Skeleton): Float64Array {
  const B = skeleton.bones.length;
  const psi = denseWeights(mesh, B);
  for (let i = 0; i < B; i++) {
    const p = skeleton.bones[i].parentIndex;
    if (p >= 0) {
      for (let u = 0; u < mesh.numVertices; u++) {
        psi[u * B + i] += psi[u * B + p];
      }
    }
  }
  return psi;
}

/** Lumped surface masses: one third of each incident triangle area.
 * Degenerate triangles contribute zero and are tolerated. */
export function computeVertexMasses(mesh: SkinnedMesh): Float64Array {
  const masses = new Float64Array(mesh.numVertices);
  const numTris = mesh.triangles.length / 3;
  if (numTris === 0) return masses;
  const p = mesh.restPositions;
  const third = new Float64Array(numTris);
  for (let j = 0; j < numTris; j++) {
    const a = mesh.triangles[3 * j] * 3;
    const b = mesh.triangles[3 * j + 1] * 3;
    const c = mesh.triangles[3 * j + 2] * 3;
    const e1x = p[b] - p[a], e1y = p[b + 1] - p[a + 1], e1z = p[b + 2] - p[a + 2];
    const e2x = p[c] - p[a], e2y = p[c + 1] - p[a + 1], e2z = p[c + 2] - p[a + 2];
    const cx = e1y * e2z - e1z * e2y;
    const cy = e1z * e2x - e1x * e2z;
    const cz = e1x * e2y - e1y * e2x;
    third[j] = 0.5 * Math.sqrt(cx * cx + cy * cy + cz * cz) / 3.0;
  }
  // corner-major scatter matches the reference accumulation order
  for (let k = 0; k < 3; k++) {
    for (let j = 0; j < numTris; j++) {
      masses[mesh.triangles[3 * j + k]] += third[j];
    }
  }
  return masses;
}

/** Mass-weighted rest centroids, one per bone, with the ancestor weights
 * deciding how strongly each vertex belongs. Bones whose support carries
 * no mass fall back to their own origin. */
export function computeBoneCentroids(
  mesh: SkinnedMesh,
  psi: Float64Array,
  masses: Float64Array,
  restOrigins: Vec3[],
): Vec3[] {
  const B = restOrigins.length;
  const out: Vec3[] = [];
  for (let i = 0; i < B; i++) {
    let denom = 0;
    let nx = 0, ny = 0, nz = 0;
    for (let u = 0; u < mesh.numVertices; u++) {
      const c = psi[u * B + i] * masses[u];
      denom += c;
      nx += c * mesh.restPositions[3 * u];
      ny += c * mesh.restPositions[3 * u + 1];
      nz += c * mesh.restPositions[3 * u + 2];
    }
    if (denom <= EPS) {
      const o = restOrigins[i];
      out.push([o[0], o[1], o[2]]);
    } else {
      out.push([nx / denom, ny / denom, nz / denom]);
    }
  }
  return out;
}

export function computePrecomputed(scene: SceneData): Precomputed {
  const phi = propagateWeightsUpward(scene.mesh, scene.skeleton);
  const psi = propagateWeightsDownward(scene.mesh, scene.skeleton);
  const masses = computeVertexMasses(scene.mesh);
  const origins = restGlobals(scene.skeleton).map((g) => g.translation);
  const centroids = computeBoneCentroids(scene.mesh, psi, masses, origins);
  return { phi, psi, masses, centroids };
}

export function restGeometry(scene: SceneData): BoneGeometry {
  if (scene.precomputed === null) {
    throw new Error("scene has no precomputed data; run precompute first");
  }
  return {
    centroids: scene.precomputed.centroids,
    origins: restGlobals(scene.skeleton).map((g) => g.translation),
  };
}
