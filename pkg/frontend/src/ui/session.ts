/** Authoring session state.
 *
 * Owns the scene model, the working copy of the deformation parameters,
 * and the edit history. Every edit is a change to the parameter set and
 * nothing else, which is what makes undo/redo exact: the history holds
 * full parameter snapshots, and restoring one brings back every array
 * bit for bit.
 *
 * No deformation math lives here or anywhere else in the ui/ directory;
 * poses, velocities, deformed frames, and trajectories all come from the
 * binding layer.
 */

import {
  deformMesh,
  posedBoneGeometry,
  precomputeModel,
  traceTrajectories,
  type PoseRequest,
  type SceneModel,
} from "../binding.js";
import type { DeformedFrame } from "../engine/deform.js";
import { quatConjugate, quatRotate, type Vec3 } from "../engine/math.js";
import { paramsFileText, parseParamsFileText } from "../engine/scene.js";
import {
  cloneParams,
  identityPose,
  kinematicsAllZero,
  zeroKinematics,
  type BoneKinematics,
  type VsParams,
} from "../engine/types.js";
import { applyPaint, PAINT_MAX, PAINT_MIN, type BrushHit, type BrushSettings } from "./brush.js";

// deep history; must stay comfortably above 20 levels
const HISTORY_LIMIT = 64;

export interface CameraState {
  yaw: number;
  pitch: number;
  distance: number;
  target: Vec3;
}

export interface BoneControlUpdate {
  squashOn?: boolean;
  floppyOn?: boolean;
  squashPointMode?: boolean;
  squashTranslationalGain?: number;
  squashRotationalGain?: number;
  floppyTranslationalGain?: number;
  floppyRotationalGain?: number;
}

export class Session {
  readonly model: SceneModel;
  params: VsParams;
  activeClip: string | null;
  playhead = 0;
  brush: BrushSettings = { radius: 0.25, strength: 0.25, sign: 1, target: "k_floppy" };
  paintMin = PAINT_MIN;
  paintMax = PAINT_MAX;
  camera: CameraState = { yaw: 0.6, pitch: 0.35, distance: 4, target: [0, 0.8, 0] };
  selectedBone = 0;
  velocitySpec: BoneKinematics;
  dirty = false;

  private undoStack: VsParams[] = [];
  private redoStack: VsParams[] = [];

  constructor(model: SceneModel) {
    precomputeModel(model);
    this.model = model;
    this.params = cloneParams(model.scene.vsParams);
    this.activeClip = model.scene.clips.length > 0 ? model.scene.clips[0].name : null;
    this.velocitySpec = zeroKinematics(model.scene.skeleton.bones.length);
  }

  get numBones(): number {
    return this.model.scene.skeleton.bones.length;
  }

  // -- history ------------------------------------------------------------

  private pushUndo(): void {
    this.undoStack.push(cloneParams(this.params));
    if (this.undoStack.length > HISTORY_LIMIT) {
      this.undoStack.shift();
    }
    this.redoStack.length = 0;
    this.dirty = true;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.redoStack.push(this.params);
    this.params = prev;
    this.dirty = true;
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) return false;
    this.undoStack.push(this.params);
    this.params = next;
    this.dirty = true;
    return true;
  }

  // -- edits --------------------------------------------------------------

  /** Apply the current brush along the given hits. Returns whether
   * anything changed; a zero-strength brush or an empty hit list is a
   * true no-op and does not touch the history. */
  paint(hits: readonly BrushHit[]): boolean {
    if (hits.length === 0 || this.brush.strength === 0) return false;
    this.pushUndo();
    const field = this.brush.target === "k_squash" ? this.params.kSquash : this.params.kFloppy;
    applyPaint(field, hits, this.brush.sign, this.brush.strength, this.paintMin, this.paintMax);
    return true;
  }

  setBoneControls(bone: number, update: BoneControlUpdate): boolean {
    const p = this.params;
    const changed =
      (update.squashOn !== undefined && update.squashOn !== p.squashOn[bone]) ||
      (update.floppyOn !== undefined && update.floppyOn !== p.floppyOn[bone]) ||
      (update.squashPointMode !== undefined && update.squashPointMode !== p.squashPointMode[bone]) ||
      (update.squashTranslationalGain !== undefined &&
        update.squashTranslationalGain !== p.squashTranslationalGain[bone]) ||
      (update.squashRotationalGain !== undefined &&
        update.squashRotationalGain !== p.squashRotationalGain[bone]) ||
      (update.floppyTranslationalGain !== undefined &&
        update.floppyTranslationalGain !== p.floppyTranslationalGain[bone]) ||
      (update.floppyRotationalGain !== undefined &&
        update.floppyRotationalGain !== p.floppyRotationalGain[bone]);
    if (!changed) return false;
    this.pushUndo();
    if (update.squashOn !== undefined) p.squashOn[bone] = update.squashOn;
    if (update.floppyOn !== undefined) p.floppyOn[bone] = update.floppyOn;
    if (update.squashPointMode !== undefined) p.squashPointMode[bone] = update.squashPointMode;
    if (update.squashTranslationalGain !== undefined)
      p.squashTranslationalGain[bone] = update.squashTranslationalGain;
    if (update.squashRotationalGain !== undefined)
      p.squashRotationalGain[bone] = update.squashRotationalGain;
    if (update.floppyTranslationalGain !== undefined)
      p.floppyTranslationalGain[bone] = update.floppyTranslationalGain;
    if (update.floppyRotationalGain !== undefined)
      p.floppyRotationalGain[bone] = update.floppyRotationalGain;
    return true;
  }

  setThetaMax(value: number | null): boolean {
    if (value === this.params.thetaMax) return false;
    this.pushUndo();
    this.params.thetaMax = value;
    return true;
  }

  /** Move a bone's deformation center by a world-space delta measured in
   * the current pose. The offset is stored in the bone's frame, so the
   * marker stays attached to the bone as the animation plays. */
  dragCentroid(bone: number, worldDelta: Vec3): boolean {
    if (worldDelta[0] === 0 && worldDelta[1] === 0 && worldDelta[2] === 0) return false;
    const geo = posedBoneGeometry(this.model, this.poseRequest(), this.params.centroidOffsets);
    const local = quatRotate(quatConjugate(geo.rotations[bone]), worldDelta);
    this.pushUndo();
    const o = this.params.centroidOffsets[bone];
    this.params.centroidOffsets[bone] = [o[0] + local[0], o[1] + local[1], o[2] + local[2]];
    return true;
  }

  replaceParams(params: VsParams): void {
    this.pushUndo();
    this.params = cloneParams(params);
  }

  // -- evaluation ---------------------------------------------------------

  poseRequest(): PoseRequest {
    if (this.activeClip === null) {
      return { pose: identityPose(this.numBones) };
    }
    return { clip: this.activeClip, t: this.playhead };
  }

  /** Move the playhead and evaluate the frame there. In clip playback the
   * velocities come from a finite difference around the playhead, so a
   * paused scrub through a moving clip still shows the secondary motion
   * that speed implies. */
  scrub(t: number): DeformedFrame {
    this.playhead = t;
    return deformMesh(this.model, { at: this.poseRequest(), params: this.params });
  }

  /** Evaluate the current pose with the hand-authored velocity spec
   * instead of clip-derived velocities. */
  evaluateStatic(): DeformedFrame {
    return deformMesh(this.model, {
      at: this.poseRequest(),
      velocities: this.velocitySpec,
      params: this.params,
    });
  }

  /** Trajectory polylines for the given vertices under the velocity
   * spec. An all-zero spec yields no polylines. */
  visualizeStatic(vertices: number[], samples: number): Vec3[][] {
    if (kinematicsAllZero(this.velocitySpec)) return [];
    return traceTrajectories(this.model, {
      at: this.poseRequest(),
      velocities: this.velocitySpec,
      params: this.params,
      vertices,
      samples,
    });
  }

  setBoneVelocity(bone: number, angular: Vec3, linear: Vec3): void {
    this.velocitySpec.angular[bone] = [...angular];
    this.velocitySpec.linear[bone] = [...linear];
  }

  boneGeometry(): ReturnType<typeof posedBoneGeometry> {
    return posedBoneGeometry(this.model, this.poseRequest(), this.params.centroidOffsets);
  }

  // -- persistence --------------------------------------------------------

  saveParamsText(): string {
    const text = paramsFileText(this.params);
    this.dirty = false;
    return text;
  }

  loadParamsText(text: string): void {
    const params = parseParamsFileText(
      text,
      this.model.scene.mesh.numVertices,
      this.numBones,
    );
    this.replaceParams(params);
  }
}
