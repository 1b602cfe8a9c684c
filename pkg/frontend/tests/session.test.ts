/** Authoring-session behavior, ending in the full round trip: strokes
 * painted here, saved through the session, fed to the reference bake
 * command, and compared against the live view at the same frame.
 */

import { describe, expect, it } from "vitest";

import type { VsParams } from "../src/engine/types.js";
import { cloneParams } from "../src/engine/types.js";
import { loadScene } from "../src/binding.js";
import type { Vec3 } from "../src/engine/math.js";
import { falloff, sphereHits } from "../src/ui/brush.js";
import { Session } from "../src/ui/session.js";
import {
  expectations as fx,
  fixtureText,
  flat,
  maxAbsDiff,
  samePositions,
  type StrokeFx,
} from "./helpers.js";

function newSession(): Session {
  return new Session(loadScene(fixtureText("scene_precomputed.json")));
}

/** Apply one fixture stroke through the session's paint operation. */
function applyStroke(s: Session, stroke: StrokeFx): boolean {
  s.brush.target = stroke.target;
  s.brush.sign = stroke.sign;
  s.brush.strength = stroke.strength;
  s.brush.radius = stroke.radius;
  const hits = sphereHits(s.model.scene.mesh.restPositions, stroke.center, stroke.radius);
  return s.paint(hits);
}

function sameBits(a: ArrayLike<number>, b: ArrayLike<number>): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (!Object.is(a[i], b[i])) return false;
  }
  return true;
}

function paramsEqualBits(a: VsParams, b: VsParams): boolean {
  return (
    sameBits(a.kSquash, b.kSquash) &&
    sameBits(a.kFloppy, b.kFloppy) &&
    a.squashOn.every((v, i) => v === b.squashOn[i]) &&
    a.floppyOn.every((v, i) => v === b.floppyOn[i]) &&
    a.squashPointMode.every((v, i) => v === b.squashPointMode[i]) &&
    sameBits(a.squashTranslationalGain, b.squashTranslationalGain) &&
    sameBits(a.squashRotationalGain, b.squashRotationalGain) &&
    sameBits(a.floppyTranslationalGain, b.floppyTranslationalGain) &&
    sameBits(a.floppyRotationalGain, b.floppyRotationalGain) &&
    a.centroidOffsets.every((o, i) => sameBits(o, b.centroidOffsets[i])) &&
    Object.is(a.thetaMax, b.thetaMax)
  );
}

describe("painting", () => {
  it("uses the clamp range the fixtures were generated with", () => {
    const s = newSession();
    expect([s.paintMin, s.paintMax]).toEqual(fx.paint.clamp);
  });

  it("reports falloff inside (0, 1] and decreasing with distance", () => {
    const hits = sphereHits(
      newSession().model.scene.mesh.restPositions,
      fx.paint.strokes[0].center,
      fx.paint.strokes[0].radius,
    );
    expect(hits.length).toBeGreaterThan(0);
    for (const h of hits) {
      expect(h.falloff).toBeGreaterThan(0);
      expect(h.falloff).toBeLessThanOrEqual(1);
    }
    let prev = Infinity;
    for (let k = 0; k <= 10; k++) {
      const f = falloff(k / 10, 1);
      expect(f).toBeLessThan(prev + 1e-15);
      prev = f;
    }
    expect(falloff(0, 1)).toBe(1);
  });

  it("does nothing at zero strength", () => {
    const s = newSession();
    const before = cloneParams(s.params);
    s.brush.strength = 0;
    const hits = sphereHits(s.model.scene.mesh.restPositions, [0, 1, 0], 10);
    expect(hits.length).toBe(s.model.scene.mesh.numVertices);
    expect(s.paint(hits)).toBe(false);
    expect(s.undoDepth).toBe(0);
    expect(paramsEqualBits(s.params, before)).toBe(true);
  });

  it("erasing a stroke restores the painted field", () => {
    const s = newSession();
    const before = cloneParams(s.params);
    const stroke = fx.paint.strokes[0];
    expect(applyStroke(s, stroke)).toBe(true);
    expect(sameBits(s.params.kFloppy, before.kFloppy)).toBe(false);
    expect(applyStroke(s, { ...stroke, sign: -1 })).toBe(true);
    expect(maxAbsDiff(s.params.kFloppy, before.kFloppy)).toBeLessThanOrEqual(1e-6);
  });

  it("saturates at the clamp bounds exactly", () => {
    const s = newSession();
    s.brush.target = "k_floppy";
    s.brush.strength = 100;
    s.brush.sign = 1;
    const hits = sphereHits(s.model.scene.mesh.restPositions, [0, 1, 0], 10);
    s.paint(hits);
    let sawMax = false;
    for (const h of hits) {
      expect(s.params.kFloppy[h.vertex]).toBeLessThanOrEqual(s.paintMax);
      if (s.params.kFloppy[h.vertex] === s.paintMax) sawMax = true;
    }
    expect(sawMax).toBe(true);
    s.brush.sign = -1;
    s.paint(hits);
    s.paint(hits);
    expect(s.params.kFloppy.some((v) => v === s.paintMin)).toBe(true);
  });
});

describe("history", () => {
  it("restores parameters bit for bit through deep undo and redo", () => {
    const s = newSession();
    const snapshots: VsParams[] = [cloneParams(s.params)];
    const edits = 25;
    for (let j = 0; j < edits; j++) {
      const kind = j % 4;
      let changed = false;
      if (kind === 0) {
        const stroke = fx.paint.strokes[j % fx.paint.strokes.length];
        changed = applyStroke(s, { ...stroke, strength: 0.02 + 0.01 * j });
      } else if (kind === 1) {
        changed = s.setBoneControls(j % fx.num_bones, {
          floppyRotationalGain: 0.5 + 0.05 * j,
        });
      } else if (kind === 2) {
        changed = s.setThetaMax(j === 10 ? null : 0.1 + 0.02 * j);
      } else {
        changed = s.dragCentroid(j % fx.num_bones, [0.001 * (j + 1), 0, -0.0005 * j]);
      }
      expect(changed).toBe(true);
      snapshots.push(cloneParams(s.params));
    }
    expect(s.undoDepth).toBe(edits);
    for (let j = edits; j > 0; j--) {
      expect(paramsEqualBits(s.params, snapshots[j])).toBe(true);
      expect(s.undo()).toBe(true);
    }
    expect(paramsEqualBits(s.params, snapshots[0])).toBe(true);
    expect(s.undo()).toBe(false);
    for (let j = 1; j <= edits; j++) {
      expect(s.redo()).toBe(true);
      expect(paramsEqualBits(s.params, snapshots[j])).toBe(true);
    }
    expect(s.redo()).toBe(false);
  });

  it("drops the redo branch on a new edit", () => {
    const s = newSession();
    applyStroke(s, fx.paint.strokes[0]);
    applyStroke(s, fx.paint.strokes[1]);
    expect(s.undo()).toBe(true);
    applyStroke(s, fx.paint.strokes[2]);
    expect(s.redo()).toBe(false);
  });
});

describe("bone controls", () => {
  it("turning every effect off leaves plain skinning", () => {
    const s = newSession();
    for (let i = 0; i < fx.num_bones; i++) {
      expect(s.setBoneControls(i, { squashOn: false, floppyOn: false })).toBe(true);
    }
    const frame = s.scrub(fx.clip_samples[0].t);
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
  });

  it("ignores a zero centroid drag", () => {
    const s = newSession();
    expect(s.dragCentroid(1, [0, 0, 0])).toBe(false);
    expect(s.undoDepth).toBe(0);
    expect(sameBits(s.params.centroidOffsets[1], [0, 0, 0])).toBe(true);
  });

  it("keeps a dragged center attached to its bone", () => {
    const s = newSession();
    s.playhead = 0.1;
    const delta: Vec3 = [0.07, -0.02, 0.04];
    const beforeGeo = s.boneGeometry();
    expect(s.dragCentroid(2, delta)).toBe(true);

    // at the drag pose the marker moved by the requested world delta
    const atDrag = s.boneGeometry();
    const moved: Vec3 = [
      atDrag.centroids[2][0] - beforeGeo.centroids[2][0],
      atDrag.centroids[2][1] - beforeGeo.centroids[2][1],
      atDrag.centroids[2][2] - beforeGeo.centroids[2][2],
    ];
    expect(maxAbsDiff(moved, delta)).toBeLessThanOrEqual(1e-12);

    // rigid attachment: the world offset keeps its length as the clip
    // plays, because it is stored in the bone's frame
    const lengths: number[] = [];
    for (const t of [0, 0.12, 0.27, 0.45]) {
      s.playhead = t;
      const withOffset = s.boneGeometry();
      const plain = new Session(s.model);
      plain.playhead = t;
      const base = plain.boneGeometry();
      const d = [
        withOffset.centroids[2][0] - base.centroids[2][0],
        withOffset.centroids[2][1] - base.centroids[2][1],
        withOffset.centroids[2][2] - base.centroids[2][2],
      ];
      lengths.push(Math.hypot(d[0], d[1], d[2]));
    }
    const target = Math.hypot(delta[0], delta[1], delta[2]);
    for (const len of lengths) {
      expect(Math.abs(len - target)).toBeLessThanOrEqual(1e-12);
    }
  });
});

describe("scrubbing and static preview", () => {
  it("freezes to plain skinning past the end of the clip", () => {
    const s = newSession();
    const frame = s.scrub(0.75);
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
  });

  it("shows plain skinning for an all-zero velocity spec", () => {
    const s = newSession();
    s.playhead = 0.2;
    const frame = s.evaluateStatic();
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
    expect(s.visualizeStatic([0, 5, 11], 5)).toEqual([]);
  });

  it("draws trajectory ramps from the skinned position outward", () => {
    const s = newSession();
    s.playhead = 0.2;
    s.setBoneVelocity(2, [0, 0, 6], [0, 0, 0]);
    const still = s.evaluateStatic();
    // top-ring vertices, well inside the spun bone's influence region
    const verts = [72, 79];
    const paths = s.visualizeStatic(verts, 7);
    expect(paths.length).toBe(2);
    for (const [k, u] of verts.entries()) {
      expect(paths[k].length).toBe(7);
      const start = paths[k][0];
      expect(start[0]).toBe(still.lbsPositions[3 * u]);
      expect(start[1]).toBe(still.lbsPositions[3 * u + 1]);
      expect(start[2]).toBe(still.lbsPositions[3 * u + 2]);
      const end = paths[k][6];
      const travel = Math.hypot(end[0] - start[0], end[1] - start[1], end[2] - start[2]);
      expect(travel).toBeGreaterThan(0);
    }
  });

  it("honors the bend limit exactly in the live view", () => {
    const s = newSession();
    s.brush.target = "k_floppy";
    s.brush.strength = 0.8;
    s.brush.sign = 1;
    s.paint(sphereHits(s.model.scene.mesh.restPositions, [0, 1, 0], 10));
    s.setBoneVelocity(2, [0, 0, 9], [0, 0, 0]);
    const unclamped = s.evaluateStatic();
    expect(unclamped.maxBendAngle).toBeGreaterThan(Math.PI / 4);
    s.setThetaMax(Math.PI / 4);
    const clamped = s.evaluateStatic();
    expect(clamped.maxBendAngle).toBe(Math.PI / 4);
  });
});

describe("saving", () => {
  it("saves an untouched session identically to the reference writer", () => {
    expect(newSession().saveParamsText()).toBe(fixtureText("default_params.json"));
  });

  it("loads a parameter file and saves it back unchanged", () => {
    const s = newSession();
    s.loadParamsText(fixtureText("painted_params.json"));
    expect(s.saveParamsText()).toBe(fixtureText("painted_params.json"));
    expect(s.undo()).toBe(true);
    expect(s.saveParamsText()).toBe(fixtureText("default_params.json"));
  });

  it("round-trips painted strokes through the reference bake", () => {
    const s = newSession();
    for (const stroke of fx.paint.strokes) {
      expect(applyStroke(s, stroke)).toBe(true);
    }
    // the file the session writes is byte-identical to the one the
    // reference bake consumed when the fixtures were generated
    expect(s.saveParamsText()).toBe(fixtureText("painted_params.json"));

    // the live view at the baked frame time matches the baked geometry
    const frame = s.scrub(fx.bake.t);
    const baked = flat(fx.bake.positions);
    let worst = 0;
    for (let u = 0; u < fx.num_vertices; u++) {
      const dx = frame.positions[3 * u] - baked[3 * u];
      const dy = frame.positions[3 * u + 1] - baked[3 * u + 1];
      const dz = frame.positions[3 * u + 2] - baked[3 * u + 2];
      worst = Math.max(worst, Math.hypot(dx, dy, dz));
    }
    expect(worst).toBeLessThanOrEqual(1e-5);
    expect(s.dirty).toBe(false);
  });
});
