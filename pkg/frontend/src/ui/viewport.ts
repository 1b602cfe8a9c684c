/** Software viewport: orbit camera plus flat-shaded canvas-2D rendering.
 *
 * Triangles are painter-sorted by view depth and shaded with normals
 * recomputed from the deformed positions each frame, so secondary motion
 * reads in the shading and not just the silhouette. The ghost overlay
 * draws the plain-skinning wireframe behind the deformed surface for
 * comparison. Everything here is presentation; positions arrive already
 * deformed.
 */

import type { Vec3 } from "../engine/math.js";
import type { CameraState } from "./session.js";

export const DEFAULT_FOV = 0.9;

export interface CameraBasis {
  eye: Vec3;
  right: Vec3;
  up: Vec3;
  forward: Vec3;
}

export function cameraBasis(cam: CameraState): CameraBasis {
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const dir: Vec3 = [cp * sy, sp, cp * cy];
  const eye: Vec3 = [
    cam.target[0] + cam.distance * dir[0],
    cam.target[1] + cam.distance * dir[1],
    cam.target[2] + cam.distance * dir[2],
  ];
  const forward: Vec3 = [-dir[0], -dir[1], -dir[2]];
  // world up; the orbit clamps pitch short of the poles
  let rx = forward[2];
  let rz = -forward[0];
  const rn = Math.hypot(rx, rz);
  if (rn < 1e-9) {
    rx = 1;
    rz = 0;
  } else {
    rx /= rn;
    rz /= rn;
  }
  const right: Vec3 = [rx, 0, rz];
  const up: Vec3 = [
    right[1] * forward[2] - right[2] * forward[1],
    right[2] * forward[0] - right[0] * forward[2],
    right[0] * forward[1] - right[1] * forward[0],
  ];
  return { eye, right, up, forward };
}

function viewCoords(b: CameraBasis, x: number, y: number, z: number): Vec3 {
  const vx = x - b.eye[0];
  const vy = y - b.eye[1];
  const vz = z - b.eye[2];
  return [
    vx * b.right[0] + vy * b.right[1] + vz * b.right[2],
    vx * b.up[0] + vy * b.up[1] + vz * b.up[2],
    vx * b.forward[0] + vy * b.forward[1] + vz * b.forward[2],
  ];
}

/** Project a world point to pixel coordinates plus view depth; returns
 * null for points at or behind the eye plane. */
export function project(
  cam: CameraState,
  p: Vec3,
  width: number,
  height: number,
  fov: number = DEFAULT_FOV,
): [number, number, number] | null {
  const b = cameraBasis(cam);
  const v = viewCoords(b, p[0], p[1], p[2]);
  if (v[2] <= 1e-6) return null;
  const focal = height / 2 / Math.tan(fov / 2);
  return [width / 2 + (v[0] * focal) / v[2], height / 2 - (v[1] * focal) / v[2], v[2]];
}

/** Screen positions for every vertex of a flat xyz array; entries behind
 * the camera come back as NaN pairs so hit testing skips them. */
export function projectAll(
  cam: CameraState,
  positions: ArrayLike<number>,
  width: number,
  height: number,
  fov: number = DEFAULT_FOV,
): Float64Array {
  const b = cameraBasis(cam);
  const focal = height / 2 / Math.tan(fov / 2);
  const n = Math.floor(positions.length / 3);
  const out = new Float64Array(n * 2);
  for (let u = 0; u < n; u++) {
    const v = viewCoords(b, positions[3 * u], positions[3 * u + 1], positions[3 * u + 2]);
    if (v[2] <= 1e-6) {
      out[2 * u] = NaN;
      out[2 * u + 1] = NaN;
    } else {
      out[2 * u] = width / 2 + (v[0] * focal) / v[2];
      out[2 * u + 1] = height / 2 - (v[1] * focal) / v[2];
    }
  }
  return out;
}

/** World-space displacement matching a screen-space drag at the given
 * view depth; moves in the camera's right/up plane. */
export function worldDeltaFromScreen(
  cam: CameraState,
  dxPixels: number,
  dyPixels: number,
  depth: number,
  height: number,
  fov: number = DEFAULT_FOV,
): Vec3 {
  const b = cameraBasis(cam);
  const focal = height / 2 / Math.tan(fov / 2);
  const sx = (dxPixels * depth) / focal;
  const sy = (-dyPixels * depth) / focal;
  return [
    sx * b.right[0] + sy * b.up[0],
    sx * b.right[1] + sy * b.up[1],
    sx * b.right[2] + sy * b.up[2],
  ];
}

/** Unit face normal from the deformed triangle corners; degenerate
 * triangles get a zero normal and render unlit rather than throwing. */
export function faceNormal(
  ax: number, ay: number, az: number,
  bx: number, by: number, bz: number,
  cx: number, cy: number, cz: number,
): Vec3 {
  const ux = bx - ax;
  const uy = by - ay;
  const uz = bz - az;
  const vx = cx - ax;
  const vy = cy - ay;
  const vz = cz - az;
  const nx = uy * vz - uz * vy;
  const ny = uz * vx - ux * vz;
  const nz = ux * vy - uy * vx;
  const n = Math.hypot(nx, ny, nz);
  if (n < 1e-12) return [0, 0, 0];
  return [nx / n, ny / n, nz / n];
}

const LIGHT: Vec3 = [0.42, 0.82, 0.39];

export interface RenderInput {
  positions: ArrayLike<number>;
  triangles: ArrayLike<number>;
  /** Plain-skinning positions for the ghost wireframe; null hides it. */
  ghost?: ArrayLike<number> | null;
  trajectories?: Vec3[][];
  boneOrigins?: Vec3[];
  boneCentroids?: Vec3[];
  selectedBone?: number;
  /** Per-vertex paint values to tint the surface with. */
  paintField?: ArrayLike<number> | null;
  paintTint?: [number, number, number];
  /** Screen-space brush cursor (x, y, radius), if painting. */
  cursor?: [number, number, number] | null;
}

export class Viewport {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(readonly canvas: HTMLCanvasElement, public fov: number = DEFAULT_FOV) {
    const ctx = canvas.getContext("2d");
    if (ctx === null) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
  }

  draw(cam: CameraState, input: RenderInput): void {
    const { ctx } = this;
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.fillStyle = "#161a20";
    ctx.fillRect(0, 0, w, h);
    const basis = cameraBasis(cam);
    const focal = h / 2 / Math.tan(this.fov / 2);

    if (input.ghost != null) {
      this.strokeWire(basis, focal, input.ghost, input.triangles, "rgba(150,160,175,0.28)");
    }
    this.fillMesh(basis, focal, input);
    this.drawBones(basis, focal, input);
    if (input.trajectories !== undefined) {
      for (const path of input.trajectories) {
        this.strokePath(basis, focal, path, "#ffd166", 1.6);
      }
    }
    if (input.cursor != null) {
      ctx.strokeStyle = "rgba(255,255,255,0.75)";
      ctx.lineWidth = 1;
      ctx.beginPath();
      ctx.arc(input.cursor[0], input.cursor[1], input.cursor[2], 0, 2 * Math.PI);
      ctx.stroke();
    }
  }

  private toScreen(basis: CameraBasis, focal: number, x: number, y: number, z: number): Vec3 | null {
    const v = viewCoords(basis, x, y, z);
    if (v[2] <= 1e-6) return null;
    const w = this.canvas.width;
    const h = this.canvas.height;
    return [w / 2 + (v[0] * focal) / v[2], h / 2 - (v[1] * focal) / v[2], v[2]];
  }

  private fillMesh(basis: CameraBasis, focal: number, input: RenderInput): void {
    const { ctx } = this;
    const pos = input.positions;
    const tris = input.triangles;
    const count = Math.floor(tris.length / 3);
    const order: { j: number; depth: number }[] = [];
    const screens: (Vec3 | null)[] = [];
    const n = Math.floor(pos.length / 3);
    for (let u = 0; u < n; u++) {
      screens.push(this.toScreen(basis, focal, pos[3 * u], pos[3 * u + 1], pos[3 * u + 2]));
    }
    for (let j = 0; j < count; j++) {
      const a = screens[tris[3 * j]];
      const b = screens[tris[3 * j + 1]];
      const c = screens[tris[3 * j + 2]];
      if (a === null || b === null || c === null) continue;
      order.push({ j, depth: (a[2] + b[2] + c[2]) / 3 });
    }
    order.sort((p, q) => q.depth - p.depth);
    const tint = input.paintTint ?? [255, 120, 90];
    const base: [number, number, number] = [120, 144, 178];
    for (const { j } of order) {
      const i0 = tris[3 * j];
      const i1 = tris[3 * j + 1];
      const i2 = tris[3 * j + 2];
      const normal = faceNormal(
        pos[3 * i0], pos[3 * i0 + 1], pos[3 * i0 + 2],
        pos[3 * i1], pos[3 * i1 + 1], pos[3 * i1 + 2],
        pos[3 * i2], pos[3 * i2 + 1], pos[3 * i2 + 2],
      );
      const lambert = Math.abs(normal[0] * LIGHT[0] + normal[1] * LIGHT[1] + normal[2] * LIGHT[2]);
      const shade = 0.3 + 0.68 * lambert;
      let mix = 0;
      if (input.paintField != null) {
        const f = input.paintField;
        const mean = (Math.abs(f[i0]) + Math.abs(f[i1]) + Math.abs(f[i2])) / 3;
        mix = Math.min(1, mean);
      }
      const r = Math.round(shade * (base[0] + (tint[0] - base[0]) * mix));
      const g = Math.round(shade * (base[1] + (tint[1] - base[1]) * mix));
      const b = Math.round(shade * (base[2] + (tint[2] - base[2]) * mix));
      const s0 = screens[i0] as Vec3;
      const s1 = screens[i1] as Vec3;
      const s2 = screens[i2] as Vec3;
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      ctx.beginPath();
      ctx.moveTo(s0[0], s0[1]);
      ctx.lineTo(s1[0], s1[1]);
      ctx.lineTo(s2[0], s2[1]);
      ctx.closePath();
      ctx.fill();
    }
  }

  private strokeWire(
    basis: CameraBasis,
    focal: number,
    pos: ArrayLike<number>,
    tris: ArrayLike<number>,
    style: string,
  ): void {
    const { ctx } = this;
    ctx.strokeStyle = style;
    ctx.lineWidth = 1;
    ctx.beginPath();
    const count = Math.floor(tris.length / 3);
    for (let j = 0; j < count; j++) {
      for (let k = 0; k < 3; k++) {
        const p = tris[3 * j + k];
        const q = tris[3 * j + ((k + 1) % 3)];
        const sp = this.toScreen(basis, focal, pos[3 * p], pos[3 * p + 1], pos[3 * p + 2]);
        const sq = this.toScreen(basis, focal, pos[3 * q], pos[3 * q + 1], pos[3 * q + 2]);
        if (sp === null || sq === null) continue;
        ctx.moveTo(sp[0], sp[1]);
        ctx.lineTo(sq[0], sq[1]);
      }
    }
    ctx.stroke();
  }

  private strokePath(
    basis: CameraBasis,
    focal: number,
    path: Vec3[],
    style: string,
    width: number,
  ): void {
    const { ctx } = this;
    ctx.strokeStyle = style;
    ctx.lineWidth = width;
    ctx.beginPath();
    let started = false;
    for (const p of path) {
      const s = this.toScreen(basis, focal, p[0], p[1], p[2]);
      if (s === null) {
        started = false;
        continue;
      }
      if (started) {
        ctx.lineTo(s[0], s[1]);
      } else {
        ctx.moveTo(s[0], s[1]);
        started = true;
      }
    }
    ctx.stroke();
  }

  private drawBones(basis: CameraBasis, focal: number, input: RenderInput): void {
    const { ctx } = this;
    const origins = input.boneOrigins;
    const centroids = input.boneCentroids;
    if (origins === undefined) return;
    ctx.strokeStyle = "rgba(255,255,255,0.55)";
    ctx.lineWidth = 1.5;
    for (let i = 0; i < origins.length; i++) {
      const so = this.toScreen(basis, focal, origins[i][0], origins[i][1], origins[i][2]);
      if (so === null) continue;
      if (centroids !== undefined) {
        const sc = this.toScreen(basis, focal, centroids[i][0], centroids[i][1], centroids[i][2]);
        if (sc !== null) {
          ctx.beginPath();
          ctx.moveTo(so[0], so[1]);
          ctx.lineTo(sc[0], sc[1]);
          ctx.stroke();
          ctx.fillStyle = i === input.selectedBone ? "#ffd166" : "#7cc5ff";
          ctx.beginPath();
          ctx.arc(sc[0], sc[1], i === input.selectedBone ? 6 : 4, 0, 2 * Math.PI);
          ctx.fill();
        }
      }
      ctx.fillStyle = i === input.selectedBone ? "#ffb15e" : "#dde5ee";
      ctx.beginPath();
      ctx.arc(so[0], so[1], 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
