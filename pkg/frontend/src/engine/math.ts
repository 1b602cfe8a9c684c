/** Scalar 3D math ported from the core engine.
 *
 * Conventions: quaternions are scalar-first [w, x, y, z], rotations are
 * right-handed, everything is float64. Operation order follows the
 * reference implementation so both sides agree to roundoff, which the
 * fixture tests rely on.
 */

import { DegenerateDirectionError, ParallelAxesError } from "./errors.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

// magnitude below which a direction carries no usable information
export const EPS = 1e-9;

// sine of the angle below which two axes count as parallel
export const PARALLEL_EPS = 1e-6;

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(v: Vec3): number {
  return Math.sqrt(dot(v, v));
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(v: Vec3, s: number): Vec3 {
  return [v[0] * s, v[1] * s, v[2] * s];
}

export function unit(v: Vec3): Vec3 {
  const n = norm(v);
  if (n <= EPS) {
    throw new DegenerateDirectionError(`cannot normalize near-zero vector [${v}]`);
  }
  return [v[0] / n, v[1] / n, v[2] / n];
}

// ---------------------------------------------------------------------------
// quaternions

export function quatIdentity(): Quat {
  return [1, 0, 0, 0];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (n <= EPS) {
    throw new DegenerateDirectionError("cannot normalize near-zero quaternion");
  }
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatConjugate(q: Quat): Quat {
  return [q[0], -q[1], -q[2], -q[3]];
}

/** Rotate a vector by a unit quaternion. */
export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const qv: Vec3 = [q[1], q[2], q[3]];
  const c = cross(qv, v);
  const t: Vec3 = [2 * c[0], 2 * c[1], 2 * c[2]];
  const c2 = cross(qv, t);
  return [
    v[0] + q[0] * t[0] + c2[0],
    v[1] + q[0] * t[1] + c2[1],
    v[2] + q[0] * t[2] + c2[2],
  ];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const a = unit(axis);
  const half = 0.5 * angle;
  const s = Math.sin(half);
  return [Math.cos(half), s * a[0], s * a[1], s * a[2]];
}

/** Row-major 3x3 rotation matrix. */
export function quatToMat3(q: Quat): number[] {
  const [w, x, y, z] = q;
  const xx = x * x, yy = y * y, zz = z * z;
  const xy = x * y, xz = x * z, yz = y * z;
  const wx = w * x, wy = w * y, wz = w * z;
  return [
    1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
    2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
    2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy),
  ];
}

/** Spherical interpolation along the shorter arc, with the same nlerp
 * fallback threshold as the reference. */
export function quatSlerp(qa: Quat, qb: Quat, u: number): Quat {
  let b = qb;
  let d = qa[0] * qb[0] + qa[1] * qb[1] + qa[2] * qb[2] + qa[3] * qb[3];
  if (d < 0) {
    b = [-qb[0], -qb[1], -qb[2], -qb[3]];
    d = -d;
  }
  if (d > 0.9995) {
    return quatNormalize([
      qa[0] + u * (b[0] - qa[0]),
      qa[1] + u * (b[1] - qa[1]),
      qa[2] + u * (b[2] - qa[2]),
      qa[3] + u * (b[3] - qa[3]),
    ]);
  }
  const theta = Math.acos(Math.min(Math.max(d, -1), 1));
  const s = Math.sin(theta);
  const ca = Math.sin((1 - u) * theta) / s;
  const cb = Math.sin(u * theta) / s;
  return [
    ca * qa[0] + cb * b[0],
    ca * qa[1] + cb * b[1],
    ca * qa[2] + cb * b[2],
    ca * qa[3] + cb * b[3],
  ];
}

/** Axis times angle for a unit quaternion, shortest representation. */
export function quatRotationVector(q: Quat): Vec3 {
  let w = q[0], x = q[1], y = q[2], z = q[3];
  if (w < 0) {
    w = -w; x = -x; y = -y; z = -z;
  }
  const s = Math.sqrt(x * x + y * y + z * z);
  if (s < 1e-12) {
    return [2 * x, 2 * y, 2 * z];
  }
  const angle = 2 * Math.atan2(s, w);
  const f = angle / s;
  return [x * f, y * f, z * f];
}

// ---------------------------------------------------------------------------
// rigid transforms

/** Rotation followed by translation: x -> R x + t. */
export class RigidTransform {
  constructor(public rotation: Quat, public translation: Vec3) {}

  static identity(): RigidTransform {
    return new RigidTransform(quatIdentity(), [0, 0, 0]);
  }

  apply(p: Vec3): Vec3 {
    const r = quatRotate(this.rotation, p);
    return [
      r[0] + this.translation[0],
      r[1] + this.translation[1],
      r[2] + this.translation[2],
    ];
  }

  compose(other: RigidTransform): RigidTransform {
    const t = quatRotate(this.rotation, other.translation);
    return new RigidTransform(
      quatNormalize(quatMul(this.rotation, other.rotation)),
      [
        t[0] + this.translation[0],
        t[1] + this.translation[1],
        t[2] + this.translation[2],
      ],
    );
  }

  inverse(): RigidTransform {
    const qi = quatConjugate(this.rotation);
    const t = quatRotate(qi, this.translation);
    return new RigidTransform(qi, [-t[0], -t[1], -t[2]]);
  }
}

// ---------------------------------------------------------------------------
// frames

export interface Frame3 {
  x: Vec3;
  y: Vec3;
  z: Vec3;
}

/** Orthonormal frame with y along primary and z as close as possible to
 * secondary. Degeneracy thresholds match the reference exactly. */
export function frameFromPrimarySecondary(primary: Vec3, secondary: Vec3): Frame3 {
  const y = unit(primary);
  const ns = norm(secondary);
  if (ns <= EPS) {
    throw new DegenerateDirectionError("secondary axis is near zero");
  }
  const d = dot(secondary, y);
  const zRaw: Vec3 = [
    secondary[0] - d * y[0],
    secondary[1] - d * y[1],
    secondary[2] - d * y[2],
  ];
  const nz = norm(zRaw);
  if (nz <= PARALLEL_EPS * ns) {
    throw new ParallelAxesError("secondary axis is parallel to primary");
  }
  const z: Vec3 = [zRaw[0] / nz, zRaw[1] / nz, zRaw[2] / nz];
  return { x: cross(y, z), y, z };
}
