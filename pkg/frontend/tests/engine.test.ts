/** Port verification against reference fixtures.
 *
 * Every numeric path in the engine is compared with values computed by
 * the reference implementation (see tests/fixtures). Tolerances are tight
 * because both sides run the same operations in the same order: pose and
 * skinning agree to rounding, accumulated deformation sums to 1e-9, and
 * structural identities (zero velocity, zero gains, the bend clamp) are
 * checked exactly.
 */

import { describe, expect, it } from "vitest";

import {
  deformMesh,
  loadScene,
  posedBoneGeometry,
  precomputeModel,
  traceTrajectories,
  type SceneModel,
} from "../src/binding.js";
import {
  CyclicHierarchyError,
  ForwardParentReferenceError,
  MultipleRootsError,
  ParseError,
  ReferentialIntegrityError,
  VersionMismatchError,
} from "../src/engine/errors.js";
import { evaluatePose, fdVelocities } from "../src/engine/kinematics.js";
import type { Vec3 } from "../src/engine/math.js";
import {
  parseSceneText,
  parseParamsFileText,
  paramsFileText,
  parseVsParamsDoc,
  pyFloatRepr,
} from "../src/engine/scene.js";
import { defaultParams, findClip, zeroKinematics } from "../src/engine/types.js";
import {
  expectations as fx,
  fixtureText,
  flat,
  kinFromDoc,
  maxAbsDiff,
  poseFromDoc,
  samePositions,
} from "./helpers.js";

const N = fx.num_vertices;
const B = fx.num_bones;

function freshModel(): SceneModel {
  return loadScene(fixtureText("scene.json"));
}

// shared read-only model with the reference-computed tables
const model = loadScene(fixtureText("scene_precomputed.json"));
const clip = findClip(model.scene, fx.clip);

describe("scene loading", () => {
  it("reads the chain scene", () => {
    expect(model.scene.mesh.numVertices).toBe(N);
    expect(model.scene.skeleton.bones.length).toBe(B);
    expect(model.scene.clips.map((c) => c.name)).toContain(fx.clip);
    expect(model.scene.loadWarnings).toEqual([]);
  });

  it("keeps stored derived tables bit for bit", () => {
    const pre = model.scene.precomputed;
    expect(pre).not.toBeNull();
    expect(maxAbsDiff(pre!.phi, flat(fx.precompute.phi))).toBe(0);
    expect(maxAbsDiff(pre!.psi, flat(fx.precompute.psi))).toBe(0);
    expect(maxAbsDiff(pre!.masses, fx.precompute.masses)).toBe(0);
    expect(maxAbsDiff(flat(pre!.centroids), flat(fx.precompute.centroids))).toBe(0);
  });
});

describe("precompute", () => {
  it("derives the influence tables from scratch", () => {
    const m = freshModel();
    expect(m.scene.precomputed).toBeNull();
    precomputeModel(m);
    const pre = m.scene.precomputed!;
    expect(maxAbsDiff(pre.phi, flat(fx.precompute.phi))).toBeLessThanOrEqual(1e-12);
    expect(maxAbsDiff(pre.psi, flat(fx.precompute.psi))).toBeLessThanOrEqual(1e-12);
    expect(maxAbsDiff(pre.masses, fx.precompute.masses)).toBeLessThanOrEqual(1e-12);
    expect(maxAbsDiff(flat(pre.centroids), flat(fx.precompute.centroids))).toBeLessThanOrEqual(
      1e-12,
    );
  });

  it("refuses to deform before tables exist", () => {
    const m = freshModel();
    expect(() => deformMesh(m, { at: { clip: fx.clip, t: 0 } })).toThrowError(/precompute/);
  });
});

describe("clip sampling", () => {
  for (const sample of fx.clip_samples) {
    it(`matches the reference pose at t=${sample.t}`, () => {
      const pose = evaluatePose(clip, model.scene.skeleton, sample.t);
      expect(maxAbsDiff(flat(pose.rotations), flat(sample.pose.rotations))).toBeLessThanOrEqual(
        1e-12,
      );
      expect(
        maxAbsDiff(flat(pose.translations), flat(sample.pose.translations)),
      ).toBeLessThanOrEqual(1e-12);
    });

    it(`recovers the exact clip velocities at t=${sample.t}`, () => {
      // interpolation spins at a constant rate inside a key segment, so
      // the centered difference agrees with the true derivative
      const kin = fdVelocities(clip, model.scene.skeleton, sample.t);
      expect(maxAbsDiff(flat(kin.angular), flat(sample.kin.angular))).toBeLessThanOrEqual(1e-6);
      expect(maxAbsDiff(flat(kin.linear), flat(sample.kin.linear))).toBeLessThanOrEqual(1e-6);
    });

    it(`skins the reference pose at t=${sample.t}`, () => {
      const frame = deformMesh(model, {
        at: { pose: poseFromDoc(sample.pose) },
        velocities: zeroKinematics(B),
      });
      expect(maxAbsDiff(frame.lbsPositions, flat(sample.lbs_positions))).toBeLessThanOrEqual(
        1e-12,
      );
    });
  }

  it("rejects unknown clip names", () => {
    expect(() => deformMesh(model, { at: { clip: "nope", t: 0 } })).toThrowError(
      /no clip named/,
    );
  });
});

describe("deformation", () => {
  for (const c of fx.deform_cases) {
    it(`matches the reference frame for ${c.name}`, () => {
      const frame = deformMesh(model, {
        at: { pose: poseFromDoc(c.pose) },
        velocities: kinFromDoc(c.kin),
        params: parseVsParamsDoc(c.params, N, B),
      });
      expect(maxAbsDiff(frame.lbsPositions, flat(c.lbs_positions))).toBeLessThanOrEqual(1e-12);
      expect(maxAbsDiff(frame.displacements, flat(c.displacements))).toBeLessThanOrEqual(1e-9);
      expect(Math.abs(frame.maxBendAngle - c.max_bend_angle)).toBeLessThanOrEqual(1e-9);
    });
  }

  it("saturates the bend clamp exactly", () => {
    const c = fx.deform_cases.find((d) => d.name === "floppy_clamped")!;
    const frame = deformMesh(model, {
      at: { pose: poseFromDoc(c.pose) },
      velocities: kinFromDoc(c.kin),
      params: parseVsParamsDoc(c.params, N, B),
    });
    expect(frame.maxBendAngle).toBe(Math.PI / 4);
    expect(frame.maxBendAngle).toBe(c.max_bend_angle);
  });

  it("contributes nothing when the spin parallels the bone axis", () => {
    const c = fx.deform_cases.find((d) => d.name === "parallel_axes")!;
    const frame = deformMesh(model, {
      at: { pose: poseFromDoc(c.pose) },
      velocities: kinFromDoc(c.kin),
      params: parseVsParamsDoc(c.params, N, B),
    });
    for (let i = 0; i < frame.displacements.length; i++) {
      expect(frame.displacements[i]).toBe(0);
    }
  });

  it("reduces to plain skinning with zero velocities", () => {
    const frame = deformMesh(model, {
      at: { pose: poseFromDoc(fx.clip_samples[0].pose) },
    });
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
  });

  it("reduces to plain skinning with zero gain fields", () => {
    const frame = deformMesh(model, {
      at: { pose: poseFromDoc(fx.clip_samples[0].pose) },
      velocities: kinFromDoc(fx.clip_samples[0].kin),
      params: defaultParams(N, B),
    });
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
  });

  it("goes still past the end of a non-looping clip", () => {
    const frame = deformMesh(model, { at: { clip: fx.clip, t: clip.duration + 0.25 } });
    expect(samePositions(frame.positions, frame.lbsPositions)).toBe(true);
  });
});

describe("trajectories", () => {
  it("matches the reference ramp", () => {
    const t = fx.trajectories;
    const paths = traceTrajectories(model, {
      at: { pose: poseFromDoc(t.pose) },
      velocities: kinFromDoc(t.kin),
      vertices: t.vertices,
      samples: t.samples,
    });
    expect(paths.length).toBe(t.vertices.length);
    for (const p of paths) expect(p.length).toBe(t.samples);
    expect(maxAbsDiff(flat(paths), flat(t.expected))).toBeLessThanOrEqual(1e-9);
  });

  it("needs at least two samples", () => {
    expect(() =>
      traceTrajectories(model, {
        at: { pose: poseFromDoc(fx.trajectories.pose) },
        vertices: [0],
        samples: 1,
      }),
    ).toThrowError(/two samples/);
  });
});

describe("posed bone geometry", () => {
  it("matches the reference centroids and origins", () => {
    const g = fx.posed_geometry;
    const offsets = g.offsets.map((o) => [o[0], o[1], o[2]] as Vec3);
    const geo = posedBoneGeometry(model, { pose: poseFromDoc(g.pose) }, offsets);
    expect(maxAbsDiff(flat(geo.centroids), flat(g.centroids))).toBeLessThanOrEqual(1e-12);
    expect(maxAbsDiff(flat(geo.origins), flat(g.origins))).toBeLessThanOrEqual(1e-12);
  });
});

describe("scene validation", () => {
  function mutated(change: (doc: any) => void): () => void {
    const doc = JSON.parse(fixtureText("scene.json"));
    change(doc);
    return () => parseSceneText(JSON.stringify(doc));
  }

  it("rejects unsupported versions", () => {
    expect(mutated((d) => (d.version = 2))).toThrowError(VersionMismatchError);
  });

  it("rejects a non-integer version", () => {
    expect(mutated((d) => (d.version = 1.5))).toThrowError(ParseError);
  });

  it("rejects duplicate clip names", () => {
    expect(mutated((d) => d.clips.push(structuredClone(d.clips[0])))).toThrowError(/duplicate/);
  });

  it("rejects duplicate tracks for one bone", () => {
    expect(
      mutated((d) => d.clips[0].tracks.push(structuredClone(d.clips[0].tracks[0]))),
    ).toThrowError(/duplicate track/);
  });

  it("rejects negative skinning weights", () => {
    expect(mutated((d) => (d.mesh.lbs_weights[0][0][1] = -0.2))).toThrowError(/negative/);
  });

  it("rejects out-of-range triangle indices", () => {
    expect(mutated((d) => (d.mesh.triangles[0][0] = 999))).toThrowError(
      ReferentialIntegrityError,
    );
  });

  it("rejects out-of-range track bones", () => {
    expect(mutated((d) => (d.clips[0].tracks[0].bone_index = 9))).toThrowError(
      ReferentialIntegrityError,
    );
  });

  it("rejects unsorted key times", () => {
    expect(
      mutated((d) => (d.clips[0].tracks[0].times[1] = d.clips[0].tracks[0].times[0])),
    ).toThrowError(/increasing/);
  });

  it("rejects unknown deformation modes", () => {
    expect(mutated((d) => (d.vs_params.bones[0].squash_mode = "banana"))).toThrowError(
      ParseError,
    );
  });

  it("rejects a negative bend limit", () => {
    expect(mutated((d) => (d.vs_params.theta_max = -0.5))).toThrowError(ParseError);
  });

  it("rejects self-parenting bones", () => {
    expect(mutated((d) => (d.skeleton.bones[0].parent_index = 0))).toThrowError(
      CyclicHierarchyError,
    );
  });

  it("rejects parents stored after their children", () => {
    expect(mutated((d) => (d.skeleton.bones[0].parent_index = 1))).toThrowError(
      ForwardParentReferenceError,
    );
  });

  it("rejects multiple roots", () => {
    expect(mutated((d) => (d.skeleton.bones[1].parent_index = -1))).toThrowError(
      MultipleRootsError,
    );
  });

  it("renormalizes off-unit weights with a warning", () => {
    const doc = JSON.parse(fixtureText("scene.json"));
    for (const pair of doc.mesh.lbs_weights[0]) pair[1] *= 2;
    const scene = parseSceneText(JSON.stringify(doc));
    expect(scene.loadWarnings.length).toBeGreaterThan(0);
    let total = 0;
    for (const [, w] of scene.mesh.weights[0]) total += w;
    expect(Math.abs(total - 1)).toBeLessThanOrEqual(1e-12);
  });

  it("renormalizes off-unit rest rotations with a warning", () => {
    const doc = JSON.parse(fixtureText("scene.json"));
    doc.skeleton.bones[0].rest_local.rotation = [2, 0, 0, 0];
    const scene = parseSceneText(JSON.stringify(doc));
    expect(scene.loadWarnings.length).toBeGreaterThan(0);
    expect(scene.skeleton.bones[0].restLocal.rotation[0]).toBeCloseTo(1, 12);
  });
});

describe("float formatting", () => {
  const cases: [number, string][] = [
    [0, "0.0"],
    [-0, "-0.0"],
    [1, "1.0"],
    [-2, "-2.0"],
    [0.5, "0.5"],
    [0.1, "0.1"],
    [1 / 3, "0.3333333333333333"],
    [2 / 3, "0.6666666666666666"],
    [Math.PI, "3.141592653589793"],
    [123.456, "123.456"],
    [0.001, "0.001"],
    [0.0001, "0.0001"],
    [1e-5, "1e-05"],
    [1.5e-5, "1.5e-05"],
    [2.5e-10, "2.5e-10"],
    [1e15, "1000000000000000.0"],
    [1e16, "1e+16"],
    [6.02e23, "6.02e+23"],
    [5e-324, "5e-324"],
    [1.7976931348623157e308, "1.7976931348623157e+308"],
  ];
  for (const [value, text] of cases) {
    it(`formats ${text}`, () => {
      expect(pyFloatRepr(value)).toBe(text);
    });
  }
});

describe("parameter files", () => {
  it("round-trips the painted file byte for byte", () => {
    const text = fixtureText("painted_params.json");
    const params = parseParamsFileText(text, N, B);
    expect(paramsFileText(params)).toBe(text);
  });

  it("round-trips the default file byte for byte", () => {
    const text = fixtureText("default_params.json");
    const params = parseParamsFileText(text, N, B);
    expect(paramsFileText(params)).toBe(text);
  });

  it("round-trips an explicit bend limit", () => {
    const params = parseParamsFileText(fixtureText("default_params.json"), N, B);
    params.thetaMax = 0.7;
    const again = parseParamsFileText(paramsFileText(params), N, B);
    expect(again.thetaMax).toBe(0.7);
  });

  it("rejects unsupported parameter versions", () => {
    const doc = JSON.parse(fixtureText("default_params.json"));
    doc.version = 2;
    expect(() => parseParamsFileText(JSON.stringify(doc), N, B)).toThrowError(
      VersionMismatchError,
    );
  });
});
