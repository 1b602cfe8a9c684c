/** Scene and parameter file handling.
 *
 * Reads the same JSON documents the CLI produces and performs the same
 * validation: structural checks with field paths in the message, index
 * range checks, weight normalization with a tolerance, and quaternions
 * kept bit-identical when they are already unit length.
 *
 * Saving parameters reproduces the CLI's byte layout exactly, including
 * Python's shortest round-trip float formatting, so a file saved here and
 * one saved by the reference tool for the same values are identical.
 */

import {
  ParseError,
  ReferentialIntegrityError,
  VersionMismatchError,
  CyclicHierarchyError,
  MultipleRootsError,
  ForwardParentReferenceError,
} from "./errors.js";
import { EPS, quatNormalize, RigidTransform, type Quat, type Vec3 } from "./math.js";
import {
  defaultParams,
  type AnimationClip,
  type Precomputed,
  type SceneData,
  type Skeleton,
  type SkinnedMesh,
  type Track,
  type VsParams,
} from "./types.js";

export const SCENE_VERSION = 1;
export const QUAT_NORM_TOL = 1e-6;
export const WEIGHT_SUM_TOL = 1e-6;

type Json = unknown;

function isObject(v: Json): v is Record<string, Json> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function need(d: Json, key: string, path: string): Json {
  if (!isObject(d)) {
    throw new ParseError(`${path}: expected an object`);
  }
  if (!(key in d)) {
    throw new ParseError(`${path}: missing required key '${key}'`);
  }
  return d[key];
}

function finiteNumber(v: Json, path: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ParseError(`${path}: expected a finite number`);
  }
  return v;
}

function numberList(v: Json, path: string, length: number | null): number[] {
  if (!Array.isArray(v) || (length !== null && v.length !== length)) {
    throw new ParseError(`${path}: expected a list${length === null ? "" : ` of length ${length}`}`);
  }
  return v.map((x, i) => finiteNumber(x, `${path}[${i}]`));
}

function vec3(v: Json, path: string): Vec3 {
  const a = numberList(v, path, 3);
  return [a[0], a[1], a[2]];
}

function unitQuat(v: Json, path: string, warnings: string[]): Quat {
  const a = numberList(v, path, 4);
  const q: Quat = [a[0], a[1], a[2], a[3]];
  const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  // renormalize only clearly off-unit values; within tolerance the stored
  // bits are kept so a load/save cycle reproduces the file exactly
  if (Math.abs(n - 1) > QUAT_NORM_TOL) {
    warnings.push(`${path}: quaternion norm ${n}, renormalized`);
    return quatNormalize(q);
  }
  return q;
}

function indexValuePairs(
  v: Json,
  path: string,
  limit: number,
  what: string,
): [number, number][] {
  if (!Array.isArray(v)) {
    throw new ParseError(`${path}: expected a list of (index, value) pairs`);
  }
  const out: [number, number][] = [];
  for (let j = 0; j < v.length; j++) {
    const pair = v[j];
    if (!Array.isArray(pair) || pair.length !== 2) {
      throw new ParseError(`${path}[${j}]: expected an (index, value) pair`);
    }
    const idx = pair[0];
    if (typeof idx !== "number" || !Number.isInteger(idx)) {
      throw new ParseError(`${path}[${j}]: index must be an integer`);
    }
    if (idx < 0 || idx >= limit) {
      throw new ReferentialIntegrityError(
        `${path}[${j}]: ${what} index ${idx} outside [0, ${limit})`,
      );
    }
    out.push([idx, finiteNumber(pair[1], `${path}[${j}]`)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// skeleton and mesh

function validateSkeleton(skeleton: Skeleton): void {
  let roots = 0;
  for (let i = 0; i < skeleton.bones.length; i++) {
    const b = skeleton.bones[i];
    if (b.parentIndex === i) {
      throw new CyclicHierarchyError(`bone ${i} ('${b.name}') is its own parent`);
    }
    if (b.parentIndex > i) {
      throw new ForwardParentReferenceError(
        `bone ${i} ('${b.name}') references parent ${b.parentIndex} stored after it`,
      );
    }
    if (b.parentIndex < 0) roots++;
  }
  if (roots > 1) {
    throw new MultipleRootsError(`expected exactly one root bone, found ${roots}`);
  }
}

function parseSkeleton(doc: Json, warnings: string[]): Skeleton {
  const bonesDoc = need(doc, "bones", "skeleton");
  if (!Array.isArray(bonesDoc) || bonesDoc.length === 0) {
    throw new ParseError("skeleton.bones: expected a non-empty list");
  }
  const bones = bonesDoc.map((b, i) => {
    const path = `skeleton.bones[${i}]`;
    const rest = need(b, "rest_local", path);
    const parent = need(b, "parent_index", path);
    if (typeof parent !== "number" || !Number.isInteger(parent)) {
      throw new ParseError(`${path}.parent_index: expected an integer`);
    }
    return {
      name: String(need(b, "name", path)),
      parentIndex: parent,
      restLocal: new RigidTransform(
        unitQuat(need(rest, "rotation", path), `${path}.rotation`, warnings),
        vec3(need(rest, "translation", path), `${path}.translation`),
      ),
    };
  });
  const skeleton = { bones };
  validateSkeleton(skeleton);
  return skeleton;
}

/** In-place weight cleanup: merge duplicates, reject negatives, renormalize
 * sums off 1 beyond tolerance with a warning. */
export function normalizeWeights(
  mesh: SkinnedMesh,
  numBones: number,
  warnings: string[],
): void {
  for (let u = 0; u < mesh.weights.length; u++) {
    const pairs = mesh.weights[u];
    const merged = new Map<number, number>();
    for (const [bone, w] of pairs) {
      if (bone < 0 || bone >= numBones) {
        throw new ParseError(
          `mesh.lbs_weights: vertex ${u} references bone ${bone} of ${numBones}`,
        );
      }
      if (w < 0) {
        throw new ParseError(
          `mesh.lbs_weights: vertex ${u} has negative weight ${w} on bone ${bone}`,
        );
      }
      merged.set(bone, (merged.get(bone) ?? 0) + w);
    }
    if (merged.size < pairs.length) {
      warnings.push(`vertex ${u}: merged duplicate bone entries`);
    }
    let total = 0;
    for (const w of merged.values()) total += w;
    if (total <= EPS) {
      throw new ParseError(`mesh.lbs_weights: vertex ${u} has zero total skinning weight`);
    }
    let entries = [...merged.entries()];
    if (Math.abs(total - 1) > WEIGHT_SUM_TOL) {
      warnings.push(`vertex ${u}: weights sum to ${total}, renormalized`);
      entries = entries.map(([b, w]) => [b, w / total]);
    }
    entries.sort((a, b) => a[0] - b[0]);
    mesh.weights[u] = entries;
  }
}

function parseMesh(doc: Json, numBones: number, warnings: string[]): SkinnedMesh {
  const posDoc = need(doc, "rest_positions", "mesh");
  if (!Array.isArray(posDoc)) {
    throw new ParseError("mesh.rest_positions: expected a list");
  }
  const n = posDoc.length;
  const restPositions = new Float64Array(n * 3);
  for (let u = 0; u < n; u++) {
    const p = vec3(posDoc[u], `mesh.rest_positions[${u}]`);
    restPositions[3 * u] = p[0];
    restPositions[3 * u + 1] = p[1];
    restPositions[3 * u + 2] = p[2];
  }
  const triDoc = need(doc, "triangles", "mesh");
  if (!Array.isArray(triDoc)) {
    throw new ParseError("mesh.triangles: expected a list");
  }
  const triangles = new Int32Array(triDoc.length * 3);
  for (let j = 0; j < triDoc.length; j++) {
    const t = triDoc[j];
    if (!Array.isArray(t) || t.length !== 3) {
      throw new ParseError(`mesh.triangles[${j}]: expected three vertex indices`);
    }
    for (let k = 0; k < 3; k++) {
      const v = t[k];
      if (typeof v !== "number" || !Number.isInteger(v)) {
        throw new ParseError(`mesh.triangles[${j}][${k}]: expected an integer`);
      }
      if (v < 0 || v >= n) {
        throw new ReferentialIntegrityError(`mesh.triangles: vertex index outside [0, ${n})`);
      }
      triangles[3 * j + k] = v;
    }
  }
  const weightsDoc = need(doc, "lbs_weights", "mesh");
  if (!Array.isArray(weightsDoc) || weightsDoc.length !== n) {
    throw new ParseError(`mesh.lbs_weights: expected one entry per vertex (${n})`);
  }
  const weights = weightsDoc.map((w, u) =>
    indexValuePairs(w, `mesh.lbs_weights[${u}]`, numBones, "bone"),
  );
  const mesh: SkinnedMesh = { restPositions, numVertices: n, triangles, weights };
  normalizeWeights(mesh, numBones, warnings);
  return mesh;
}

// ---------------------------------------------------------------------------
// clips

function parseClip(doc: Json, index: number, numBones: number, warnings: string[]): AnimationClip {
  const path = `clips[${index}]`;
  const duration = finiteNumber(need(doc, "duration", path), `${path}.duration`);
  if (duration < 0) {
    throw new ParseError(`${path}.duration: must be finite and >= 0`);
  }
  const tracksDoc = need(doc, "tracks", path);
  if (!Array.isArray(tracksDoc)) {
    throw new ParseError(`${path}.tracks: expected a list`);
  }
  const tracks: Track[] = [];
  const seen = new Set<number>();
  for (let j = 0; j < tracksDoc.length; j++) {
    const tpath = `${path}.tracks[${j}]`;
    const tr = tracksDoc[j];
    const bone = need(tr, "bone_index", tpath);
    if (typeof bone !== "number" || !Number.isInteger(bone)) {
      throw new ParseError(`${tpath}.bone_index: expected an integer`);
    }
    if (bone < 0 || bone >= numBones) {
      throw new ReferentialIntegrityError(
        `${tpath}.bone_index: ${bone} outside [0, ${numBones})`,
      );
    }
    if (seen.has(bone)) {
      throw new ParseError(`${tpath}: duplicate track for bone ${bone}`);
    }
    seen.add(bone);
    const times = Float64Array.from(numberList(need(tr, "times", tpath), `${tpath}.times`, null));
    if (times.length === 0) {
      throw new ParseError(`${tpath}.times: track has no keys`);
    }
    for (let k = 1; k < times.length; k++) {
      if (times[k] - times[k - 1] <= 0) {
        throw new ParseError(`${tpath}.times: must be strictly increasing`);
      }
    }
    const rotDoc = need(tr, "rotations", tpath);
    if (!Array.isArray(rotDoc) || rotDoc.length !== times.length) {
      throw new ParseError(`${tpath}.rotations: expected one entry per key (${times.length})`);
    }
    const rotations = rotDoc.map((q, k) => unitQuat(q, `${tpath}.rotations[${k}]`, warnings));
    const transDoc = need(tr, "translations", tpath);
    if (!Array.isArray(transDoc) || transDoc.length !== times.length) {
      throw new ParseError(`${tpath}.translations: expected one entry per key (${times.length})`);
    }
    const translations = transDoc.map((x, k) => vec3(x, `${tpath}.translations[${k}]`));
    tracks.push({ boneIndex: bone, times, rotations, translations });
  }
  return {
    name: String(need(doc, "name", path)),
    duration,
    loop: Boolean(need(doc, "loop", path)),
    tracks,
  };
}

// ---------------------------------------------------------------------------
// vs params

export function parseVsParamsDoc(doc: Json, n: number, numBones: number): VsParams {
  const params = defaultParams(n, numBones);
  if (doc === null || doc === undefined) {
    return params;
  }
  const kSquash = numberList(need(doc, "k_squash", "vs_params"), "vs_params.k_squash", n);
  const kFloppy = numberList(need(doc, "k_floppy", "vs_params"), "vs_params.k_floppy", n);
  params.kSquash = Float64Array.from(kSquash);
  params.kFloppy = Float64Array.from(kFloppy);
  if (!isObject(doc)) {
    throw new ParseError("vs_params: expected an object");
  }
  const thetaMax = doc["theta_max"];
  if (thetaMax === null || thetaMax === undefined) {
    params.thetaMax = null;
  } else {
    const v = finiteNumber(thetaMax, "vs_params.theta_max");
    if (v < 0) {
      throw new ParseError("vs_params.theta_max: must be finite and >= 0");
    }
    params.thetaMax = v;
  }
  const bonesDoc = need(doc, "bones", "vs_params");
  if (!Array.isArray(bonesDoc) || bonesDoc.length !== numBones) {
    throw new ParseError(`vs_params.bones: expected one entry per bone (${numBones})`);
  }
  for (let i = 0; i < numBones; i++) {
    const b = bonesDoc[i];
    const path = `vs_params.bones[${i}]`;
    params.squashOn[i] = Boolean(need(b, "squash_on", path));
    params.floppyOn[i] = Boolean(need(b, "floppy_on", path));
    if (!isObject(b)) {
      throw new ParseError(`${path}: expected an object`);
    }
    const gain = (key: string): number =>
      b[key] === undefined ? 1.0 : finiteNumber(b[key], `${path}.${key}`);
    params.squashTranslationalGain[i] = gain("squash_translational_gain");
    params.squashRotationalGain[i] = gain("squash_rotational_gain");
    params.floppyTranslationalGain[i] = gain("floppy_translational_gain");
    params.floppyRotationalGain[i] = gain("floppy_rotational_gain");
    const mode = b["squash_mode"] === undefined ? "axis" : b["squash_mode"];
    if (mode !== "axis" && mode !== "point") {
      throw new ParseError(
        `${path}.squash_mode: expected 'axis' or 'point', got ${JSON.stringify(mode)}`,
      );
    }
    params.squashPointMode[i] = mode === "point";
    params.centroidOffsets[i] =
      b["centroid_offset"] === undefined
        ? [0, 0, 0]
        : vec3(b["centroid_offset"], `${path}.centroid_offset`);
  }
  return params;
}

// ---------------------------------------------------------------------------
// precomputed block

function sparseToDense(doc: Json, path: string, n: number, numBones: number): Float64Array {
  if (!Array.isArray(doc) || doc.length !== n) {
    throw new ParseError(`${path}: expected one entry per vertex (${n})`);
  }
  const out = new Float64Array(n * numBones);
  for (let u = 0; u < n; u++) {
    for (const [bone, v] of indexValuePairs(doc[u], `${path}[${u}]`, numBones, "bone")) {
      out[u * numBones + bone] = v;
    }
  }
  return out;
}

function parsePrecomputed(doc: Json, n: number, numBones: number): Precomputed {
  const centDoc = need(doc, "centroids", "precomputed");
  if (!Array.isArray(centDoc) || centDoc.length !== numBones) {
    throw new ParseError(`precomputed.centroids: expected one entry per bone (${numBones})`);
  }
  return {
    phi: sparseToDense(need(doc, "phi", "precomputed"), "precomputed.phi", n, numBones),
    psi: sparseToDense(need(doc, "psi", "precomputed"), "precomputed.psi", n, numBones),
    masses: Float64Array.from(
      numberList(need(doc, "masses", "precomputed"), "precomputed.masses", n),
    ),
    centroids: centDoc.map((c, i) => vec3(c, `precomputed.centroids[${i}]`)),
  };
}

// ---------------------------------------------------------------------------
// scene document

export function parseSceneDoc(doc: Json): SceneData {
  const warnings: string[] = [];
  const version = need(doc, "version", "scene");
  if (typeof version !== "number" || !Number.isInteger(version)) {
    throw new ParseError("scene.version: expected an integer");
  }
  if (version !== SCENE_VERSION) {
    throw new VersionMismatchError(
      `scene version ${version} not supported (expected ${SCENE_VERSION})`,
    );
  }
  const skeleton = parseSkeleton(need(doc, "skeleton", "scene"), warnings);
  const mesh = parseMesh(need(doc, "mesh", "scene"), skeleton.bones.length, warnings);
  const clipsDoc = need(doc, "clips", "scene");
  if (!Array.isArray(clipsDoc)) {
    throw new ParseError("scene.clips: expected a list");
  }
  const names = new Set<string>();
  const clips = clipsDoc.map((c, i) => {
    const clip = parseClip(c, i, skeleton.bones.length, warnings);
    if (names.has(clip.name)) {
      throw new ParseError(`clips[${i}]: duplicate clip name '${clip.name}'`);
    }
    names.add(clip.name);
    return clip;
  });
  if (!isObject(doc)) {
    throw new ParseError("scene: expected an object");
  }
  const vsParams = parseVsParamsDoc(doc["vs_params"] ?? null, mesh.numVertices, skeleton.bones.length);
  const preDoc = doc["precomputed"];
  const precomputed =
    preDoc === undefined || preDoc === null
      ? null
      : parsePrecomputed(preDoc, mesh.numVertices, skeleton.bones.length);
  return { skeleton, mesh, clips, vsParams, precomputed, loadWarnings: warnings };
}

export function parseSceneText(text: string): SceneData {
  let doc: Json;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new ParseError(`invalid JSON: ${(e as Error).message}`);
  }
  return parseSceneDoc(doc);
}

// ---------------------------------------------------------------------------
// parameter files

/** Python's repr for a float64, which is also what the CLI's JSON writer
 * emits: shortest digits that round-trip, positional between 1e-4 and
 * 1e16, otherwise scientific with a sign and at least two exponent
 * digits, and integral values keeping a trailing ".0". */
export function pyFloatRepr(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot format non-finite value ${x}`);
  }
  if (Object.is(x, -0)) return "-0.0";
  if (Number.isInteger(x) && Math.abs(x) < 1e16) {
    return x.toFixed(1);
  }
  // toExponential() without an argument gives the shortest unique digits
  const m = x.toExponential().match(/^(-?)(\d)(?:\.(\d+))?e([+-]\d+)$/);
  if (!m) {
    throw new Error(`unexpected exponential form for ${x}`);
  }
  const sign = m[1];
  const digits = m[2] + (m[3] ?? "");
  const e = parseInt(m[4], 10);
  if (e < -4 || e >= 16) {
    const mant = m[3] ? `${m[2]}.${m[3]}` : m[2];
    const es = (e < 0 ? "-" : "+") + String(Math.abs(e)).padStart(2, "0");
    return `${sign}${mant}e${es}`;
  }
  let s: string;
  if (e >= 0) {
    if (digits.length > e + 1) {
      s = `${digits.slice(0, e + 1)}.${digits.slice(e + 1)}`;
    } else {
      s = `${digits}${"0".repeat(e + 1 - digits.length)}.0`;
    }
  } else {
    s = `0.${"0".repeat(-e - 1)}${digits}`;
  }
  return sign + s;
}

function floatList(a: ArrayLike<number>): string {
  const parts: string[] = [];
  for (let i = 0; i < a.length; i++) {
    parts.push(pyFloatRepr(a[i]));
  }
  return `[${parts.join(",")}]`;
}

/** Serialize parameters with the exact byte layout of the CLI: same key
 * order, same separators (no space after commas, one after colons). */
export function paramsDocText(params: VsParams): string {
  const bones: string[] = [];
  for (let i = 0; i < params.squashOn.length; i++) {
    const o = params.centroidOffsets[i];
    bones.push(
      `{"squash_on": ${params.squashOn[i]},` +
        `"floppy_on": ${params.floppyOn[i]},` +
        `"squash_translational_gain": ${pyFloatRepr(params.squashTranslationalGain[i])},` +
        `"squash_rotational_gain": ${pyFloatRepr(params.squashRotationalGain[i])},` +
        `"floppy_translational_gain": ${pyFloatRepr(params.floppyTranslationalGain[i])},` +
        `"floppy_rotational_gain": ${pyFloatRepr(params.floppyRotationalGain[i])},` +
        `"squash_mode": "${params.squashPointMode[i] ? "point" : "axis"}",` +
        `"centroid_offset": ${floatList(o)}}`,
    );
  }
  const theta = params.thetaMax === null ? "null" : pyFloatRepr(params.thetaMax);
  return (
    `{"k_squash": ${floatList(params.kSquash)},` +
    `"k_floppy": ${floatList(params.kFloppy)},` +
    `"theta_max": ${theta},` +
    `"bones": [${bones.join(",")}]}`
  );
}

/** Full standalone parameter file, as written by save_params. */
export function paramsFileText(params: VsParams): string {
  return `{"version": ${SCENE_VERSION},"vs_params": ${paramsDocText(params)}}`;
}

export function parseParamsFileText(text: string, n: number, numBones: number): VsParams {
  let doc: Json;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new ParseError(`invalid JSON: ${(e as Error).message}`);
  }
  const version = need(doc, "version", "params");
  if (version !== SCENE_VERSION) {
    throw new VersionMismatchError(`params version ${version} not supported`);
  }
  return parseVsParamsDoc(need(doc, "vs_params", "params"), n, numBones);
}
