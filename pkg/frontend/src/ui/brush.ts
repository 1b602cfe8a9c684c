/** Paint brush: hit testing and the additive paint rule.
 *
 * The falloff is the quartic (1 - (d/r)^2)^2, which is 1 at the center,
 * 0 at the radius, and strictly decreasing in between. Paint adds
 * sign * strength * falloff to the targeted per-vertex field and clamps
 * to the configured range, so a stroke and its reverse cancel.
 */

export const PAINT_MIN = -10.0;
export const PAINT_MAX = 10.0;

export interface BrushHit {
  vertex: number;
  falloff: number;
}

export interface BrushSettings {
  radius: number;
  strength: number;
  sign: 1 | -1;
  target: "k_squash" | "k_floppy";
}

/** Falloff from squared distance; assumes d2 < r2. */
export function falloff(d2: number, r2: number): number {
  const a = 1.0 - d2 / r2;
  return a * a;
}

/** Vertices of `positions` (flat xyz triples) strictly inside the sphere,
 * in ascending vertex order. */
export function sphereHits(
  positions: ArrayLike<number>,
  center: readonly [number, number, number],
  radius: number,
): BrushHit[] {
  const r2 = radius * radius;
  const hits: BrushHit[] = [];
  const n = Math.floor(positions.length / 3);
  for (let u = 0; u < n; u++) {
    const dx = positions[3 * u] - center[0];
    const dy = positions[3 * u + 1] - center[1];
    const dz = positions[3 * u + 2] - center[2];
    const d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < r2) {
      hits.push({ vertex: u, falloff: falloff(d2, r2) });
    }
  }
  return hits;
}

/** Hits for a stroke drawn on screen: a vertex is hit when its projected
 * position comes within the brush radius of any path point, with falloff
 * taken from the closest approach. */
export function screenHits(
  projected: ArrayLike<number>,
  path: readonly [number, number][],
  radius: number,
): BrushHit[] {
  const r2 = radius * radius;
  const hits: BrushHit[] = [];
  const n = Math.floor(projected.length / 2);
  for (let u = 0; u < n; u++) {
    const px = projected[2 * u];
    const py = projected[2 * u + 1];
    if (!Number.isFinite(px) || !Number.isFinite(py)) continue;
    let best = Infinity;
    for (const [sx, sy] of path) {
      const dx = px - sx;
      const dy = py - sy;
      const d2 = dx * dx + dy * dy;
      if (d2 < best) best = d2;
    }
    if (best < r2) {
      hits.push({ vertex: u, falloff: falloff(best, r2) });
    }
  }
  return hits;
}

/** Apply one stroke to a per-vertex field in place. */
export function applyPaint(
  field: Float64Array,
  hits: readonly BrushHit[],
  sign: number,
  strength: number,
  min: number = PAINT_MIN,
  max: number = PAINT_MAX,
): void {
  for (const h of hits) {
    const v = field[h.vertex] + sign * strength * h.falloff;
    field[h.vertex] = Math.min(Math.max(v, min), max);
  }
}
