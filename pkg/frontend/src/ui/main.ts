/** Browser entry point: builds the page, wires controls to the session,
 * and drives rendering.
 *
 * Evaluation is synchronous on the UI thread, which holds 60fps for the
 * mesh sizes this tool targets (tens of thousands of vertices). Render
 * requests are coalesced through requestAnimationFrame with latest-wins
 * semantics: interaction updates state and marks the view stale, and at
 * most one evaluation runs per displayed frame, so a burst of pointer
 * events costs one deform. If a scene ever outgrows the frame budget,
 * the escape hatch is to move the binding calls into a worker with the
 * same request/response shape, keeping only the newest pending request;
 * nothing in this file computes geometry, so the seam is clean.
 */

import { loadScene, type SceneModel } from "../binding.js";
import type { DeformedFrame } from "../engine/deform.js";
import type { Vec3 } from "../engine/math.js";
import { Session } from "./session.js";
import { screenHits } from "./brush.js";
import { projectAll, Viewport, worldDeltaFromScreen, project } from "./viewport.js";

type Mode = "orbit" | "paint" | "centroid";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "text") node.textContent = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

function labeled(text: string, input: HTMLElement): HTMLLabelElement {
  return el("label", { class: "row" }, el("span", { text }), input);
}

class App {
  session: Session | null = null;
  viewport: Viewport;
  mode: Mode = "orbit";
  viewMode: "clip" | "static" = "clip";
  playing = false;
  lastTick = 0;
  frame: DeformedFrame | null = null;
  showGhost = true;
  showTrajectories = false;
  trajectorySamples = 9;
  trajectoryStride = 12;
  stale = true;
  rafPending = false;

  // in-progress pointer interaction
  dragState: { kind: Mode; x: number; y: number; worldDelta: Vec3; bone: number } | null = null;

  readonly canvas: HTMLCanvasElement;
  readonly status: HTMLElement;
  readonly panel: HTMLElement;
  readonly timeSlider: HTMLInputElement;
  readonly timeReadout: HTMLElement;
  readonly bendReadout: HTMLElement;

  constructor(root: HTMLElement) {
    this.canvas = el("canvas", { width: "960", height: "640" });
    this.viewport = new Viewport(this.canvas);
    this.status = el("div", { class: "status", text: "no scene loaded" });
    this.timeSlider = el("input", { type: "range", min: "0", max: "1000", value: "0" });
    this.timeReadout = el("span", { text: "t = 0.000" });
    this.bendReadout = el("span", { text: "" });
    this.panel = el("div", { class: "panel" });
    root.append(
      el("div", { class: "main" },
        el("div", { class: "view" },
          this.canvas,
          el("div", { class: "timeline" }, this.timeSlider, this.timeReadout, this.bendReadout),
          this.status,
        ),
        this.panel,
      ),
    );
    this.wireCanvas();
    this.timeSlider.addEventListener("input", () => {
      const s = this.session;
      if (s === null) return;
      this.playing = false;
      s.playhead = (Number(this.timeSlider.value) / 1000) * this.clipDuration();
      this.invalidate();
    });
    window.addEventListener("keydown", (e) => {
      if (!(e.ctrlKey || e.metaKey) || this.session === null) return;
      if (e.key === "z" && !e.shiftKey) {
        e.preventDefault();
        if (this.session.undo()) this.invalidate();
      } else if (e.key === "y" || (e.key === "z" && e.shiftKey) || e.key === "Z") {
        e.preventDefault();
        if (this.session.redo()) this.invalidate();
      }
    });
  }

  clipDuration(): number {
    const s = this.session;
    if (s === null || s.activeClip === null) return 1;
    for (const c of s.model.scene.clips) {
      if (c.name === s.activeClip) return Math.max(c.duration, 1e-9);
    }
    return 1;
  }

  setScene(model: SceneModel, label: string): void {
    this.session = new Session(model);
    this.frame = null;
    const warn = model.scene.loadWarnings;
    this.status.textContent =
      `${label}: ${model.scene.mesh.numVertices} vertices, ` +
      `${model.scene.skeleton.bones.length} bones` +
      (warn.length > 0 ? `, ${warn.length} load warning(s)` : "");
    this.buildPanel();
    this.invalidate();
  }

  invalidate(): void {
    this.stale = true;
    if (this.rafPending) return;
    this.rafPending = true;
    requestAnimationFrame((ts) => this.tick(ts));
  }

  tick(ts: number): void {
    this.rafPending = false;
    const s = this.session;
    if (s === null) return;
    if (this.playing) {
      const dt = this.lastTick > 0 ? Math.min((ts - this.lastTick) / 1000, 0.1) : 0;
      this.lastTick = ts;
      const dur = this.clipDuration();
      s.playhead = (s.playhead + dt) % dur;
      this.timeSlider.value = String(Math.round((s.playhead / dur) * 1000));
      this.stale = true;
    } else {
      this.lastTick = 0;
    }
    if (this.stale) {
      this.stale = false;
      this.evaluateAndDraw();
    }
    if (this.playing) {
      this.rafPending = true;
      requestAnimationFrame((t2) => this.tick(t2));
    }
  }

  evaluateAndDraw(): void {
    const s = this.session;
    if (s === null) return;
    const frame = this.viewMode === "clip" ? s.scrub(s.playhead) : s.evaluateStatic();
    this.frame = frame;
    const geo = s.boneGeometry();
    let centroids = geo.centroids;
    if (this.dragState !== null && this.dragState.kind === "centroid") {
      const d = this.dragState.worldDelta;
      centroids = centroids.map((c, i) =>
        i === this.dragState!.bone ? [c[0] + d[0], c[1] + d[1], c[2] + d[2]] : c,
      );
    }
    const trajectories =
      this.viewMode === "static" && this.showTrajectories
        ? s.visualizeStatic(this.trajectoryVertices(), this.trajectorySamples)
        : [];
    this.viewport.draw(s.camera, {
      positions: frame.positions,
      triangles: s.model.scene.mesh.triangles,
      ghost: this.showGhost ? frame.lbsPositions : null,
      trajectories,
      boneOrigins: geo.origins,
      boneCentroids: centroids,
      selectedBone: s.selectedBone,
      paintField: s.brush.target === "k_squash" ? s.params.kSquash : s.params.kFloppy,
      paintTint: s.brush.target === "k_squash" ? [255, 120, 90] : [96, 160, 255],
      cursor: this.cursor,
    });
    this.timeReadout.textContent = `t = ${s.playhead.toFixed(3)}`;
    this.bendReadout.textContent =
      frame.maxBendAngle > 0 ? `peak bend ${((frame.maxBendAngle * 180) / Math.PI).toFixed(1)} deg` : "";
  }

  trajectoryVertices(): number[] {
    const s = this.session!;
    const out: number[] = [];
    for (let u = 0; u < s.model.scene.mesh.numVertices; u += this.trajectoryStride) {
      out.push(u);
    }
    return out;
  }

  cursor: [number, number, number] | null = null;

  wireCanvas(): void {
    const pos = (e: PointerEvent): [number, number] => {
      const r = this.canvas.getBoundingClientRect();
      return [
        ((e.clientX - r.left) / r.width) * this.canvas.width,
        ((e.clientY - r.top) / r.height) * this.canvas.height,
      ];
    };
    this.canvas.addEventListener("pointerdown", (e) => {
      const s = this.session;
      if (s === null) return;
      this.canvas.setPointerCapture(e.pointerId);
      const [x, y] = pos(e);
      if (this.mode === "centroid") {
        const bone = this.pickCentroid(x, y);
        if (bone === null) return;
        s.selectedBone = bone;
        this.dragState = { kind: "centroid", x, y, worldDelta: [0, 0, 0], bone };
        this.buildPanel();
      } else {
        this.dragState = { kind: this.mode, x, y, worldDelta: [0, 0, 0], bone: s.selectedBone };
        if (this.mode === "paint") this.paintAt(x, y);
      }
      this.invalidate();
    });
    this.canvas.addEventListener("pointermove", (e) => {
      const s = this.session;
      if (s === null) return;
      const [x, y] = pos(e);
      if (this.mode === "paint") {
        this.cursor = [x, y, this.brushScreenRadius()];
      } else {
        this.cursor = null;
      }
      const d = this.dragState;
      if (d === null) {
        this.invalidate();
        return;
      }
      const dx = x - d.x;
      const dy = y - d.y;
      if (d.kind === "orbit") {
        s.camera.yaw -= dx * 0.008;
        s.camera.pitch = Math.min(1.45, Math.max(-1.45, s.camera.pitch + dy * 0.008));
        d.x = x;
        d.y = y;
      } else if (d.kind === "paint") {
        this.paintAt(x, y);
        d.x = x;
        d.y = y;
      } else if (d.kind === "centroid") {
        const geo = this.session!.boneGeometry();
        const c = geo.centroids[d.bone];
        const sp = project(s.camera, c, this.canvas.width, this.canvas.height, this.viewport.fov);
        const depth = sp === null ? s.camera.distance : sp[2];
        const delta = worldDeltaFromScreen(s.camera, dx, dy, depth, this.canvas.height, this.viewport.fov);
        d.worldDelta = [d.worldDelta[0] + delta[0], d.worldDelta[1] + delta[1], d.worldDelta[2] + delta[2]];
        d.x = x;
        d.y = y;
      }
      this.invalidate();
    });
    const finish = (e: PointerEvent) => {
      const s = this.session;
      const d = this.dragState;
      this.dragState = null;
      if (s !== null && d !== null && d.kind === "centroid") {
        // one history entry per drag; a drag that went nowhere is a no-op
        s.dragCentroid(d.bone, d.worldDelta);
      }
      if (this.canvas.hasPointerCapture(e.pointerId)) {
        this.canvas.releasePointerCapture(e.pointerId);
      }
      this.invalidate();
    };
    this.canvas.addEventListener("pointerup", finish);
    this.canvas.addEventListener("pointercancel", finish);
    this.canvas.addEventListener("pointerleave", () => {
      this.cursor = null;
      this.invalidate();
    });
    this.canvas.addEventListener("wheel", (e) => {
      const s = this.session;
      if (s === null) return;
      e.preventDefault();
      s.camera.distance = Math.min(40, Math.max(0.3, s.camera.distance * Math.exp(e.deltaY * 0.001)));
      this.invalidate();
    });
  }

  brushScreenRadius(): number {
    return this.session === null ? 40 : this.session.brush.radius;
  }

  paintAt(x: number, y: number): void {
    const s = this.session;
    if (s === null || this.frame === null) return;
    const projected = projectAll(
      s.camera,
      this.frame.positions,
      this.canvas.width,
      this.canvas.height,
      this.viewport.fov,
    );
    const hits = screenHits(projected, [[x, y]], this.brushScreenRadius());
    if (s.paint(hits)) this.refreshUndoButtons();
  }

  pickCentroid(x: number, y: number): number | null {
    const s = this.session;
    if (s === null) return null;
    const geo = s.boneGeometry();
    let best: number | null = null;
    let bestD = 14 * 14;
    for (let i = 0; i < geo.centroids.length; i++) {
      const sp = project(s.camera, geo.centroids[i], this.canvas.width, this.canvas.height, this.viewport.fov);
      if (sp === null) continue;
      const d = (sp[0] - x) ** 2 + (sp[1] - y) ** 2;
      if (d < bestD) {
        bestD = d;
        best = i;
      }
    }
    return best;
  }

  undoButton: HTMLButtonElement | null = null;
  redoButton: HTMLButtonElement | null = null;

  refreshUndoButtons(): void {
    if (this.undoButton !== null) this.undoButton.disabled = this.session === null;
    if (this.redoButton !== null) this.redoButton.disabled = this.session === null;
  }

  buildPanel(): void {
    const s = this.session;
    this.panel.replaceChildren();
    if (s === null) return;
    const p = this.panel;

    // playback
    const clipSelect = el("select");
    for (const c of s.model.scene.clips) {
      clipSelect.append(el("option", { value: c.name, text: c.name }));
    }
    if (s.activeClip !== null) clipSelect.value = s.activeClip;
    clipSelect.addEventListener("change", () => {
      s.activeClip = clipSelect.value;
      s.playhead = 0;
      this.invalidate();
    });
    const playBtn = el("button", { text: "play / pause" });
    playBtn.addEventListener("click", () => {
      this.playing = !this.playing;
      this.invalidate();
    });
    const modeSelect = el("select");
    modeSelect.append(
      el("option", { value: "clip", text: "clip playback" }),
      el("option", { value: "static", text: "static pose + velocity spec" }),
    );
    modeSelect.value = this.viewMode;
    modeSelect.addEventListener("change", () => {
      this.viewMode = modeSelect.value as "clip" | "static";
      this.playing = false;
      this.buildPanel();
      this.invalidate();
    });
    p.append(el("h3", { text: "playback" }), labeled("clip", clipSelect), labeled("view", modeSelect), playBtn);

    // tool mode
    const toolSelect = el("select");
    toolSelect.append(
      el("option", { value: "orbit", text: "orbit camera" }),
      el("option", { value: "paint", text: "paint gains" }),
      el("option", { value: "centroid", text: "drag deformation center" }),
    );
    toolSelect.value = this.mode;
    toolSelect.addEventListener("change", () => {
      this.mode = toolSelect.value as Mode;
      this.invalidate();
    });
    p.append(el("h3", { text: "tool" }), labeled("mode", toolSelect));

    // brush
    const target = el("select");
    target.append(
      el("option", { value: "k_floppy", text: "k_floppy (lag)" }),
      el("option", { value: "k_squash", text: "k_squash (stretch)" }),
    );
    target.value = s.brush.target;
    target.addEventListener("change", () => {
      s.brush.target = target.value as "k_squash" | "k_floppy";
      this.invalidate();
    });
    const radius = el("input", { type: "range", min: "8", max: "160", value: String(s.brush.radius * 160) });
    radius.addEventListener("input", () => {
      s.brush.radius = Number(radius.value);
    });
    s.brush.radius = Number(radius.value);
    const strength = el("input", { type: "range", min: "0", max: "100", value: "25" });
    strength.addEventListener("input", () => {
      s.brush.strength = Number(strength.value) / 100;
    });
    const erase = el("input", { type: "checkbox" });
    erase.addEventListener("change", () => {
      s.brush.sign = erase.checked ? -1 : 1;
    });
    p.append(
      el("h3", { text: "brush" }),
      labeled("paints", target),
      labeled("radius (px)", radius),
      labeled("strength", strength),
      labeled("erase", erase),
    );

    // bone controls
    const boneSelect = el("select");
    s.model.scene.skeleton.bones.forEach((b, i) => {
      boneSelect.append(el("option", { value: String(i), text: `${i}: ${b.name}` }));
    });
    boneSelect.value = String(s.selectedBone);
    boneSelect.addEventListener("change", () => {
      s.selectedBone = Number(boneSelect.value);
      this.buildPanel();
      this.invalidate();
    });
    const i = s.selectedBone;
    const check = (value: boolean, apply: (v: boolean) => void): HTMLInputElement => {
      const c = el("input", { type: "checkbox" });
      c.checked = value;
      c.addEventListener("change", () => {
        apply(c.checked);
        this.invalidate();
      });
      return c;
    };
    const gain = (value: number, apply: (v: number) => void): HTMLInputElement => {
      const g = el("input", { type: "range", min: "0", max: "300", value: String(Math.round(value * 100)) });
      g.addEventListener("change", () => {
        apply(Number(g.value) / 100);
        this.invalidate();
      });
      return g;
    };
    const pointMode = el("input", { type: "checkbox" });
    pointMode.checked = s.params.squashPointMode[i];
    pointMode.addEventListener("change", () => {
      s.setBoneControls(i, { squashPointMode: pointMode.checked });
      this.invalidate();
    });
    p.append(
      el("h3", { text: "bone" }),
      labeled("selected", boneSelect),
      labeled("stretch term", check(s.params.squashOn[i], (v) => s.setBoneControls(i, { squashOn: v }))),
      labeled("lag term", check(s.params.floppyOn[i], (v) => s.setBoneControls(i, { floppyOn: v }))),
      labeled("radial stretch center", pointMode),
      labeled("stretch gain (linear)", gain(s.params.squashTranslationalGain[i], (v) => s.setBoneControls(i, { squashTranslationalGain: v }))),
      labeled("stretch gain (angular)", gain(s.params.squashRotationalGain[i], (v) => s.setBoneControls(i, { squashRotationalGain: v }))),
      labeled("lag gain (linear)", gain(s.params.floppyTranslationalGain[i], (v) => s.setBoneControls(i, { floppyTranslationalGain: v }))),
      labeled("lag gain (angular)", gain(s.params.floppyRotationalGain[i], (v) => s.setBoneControls(i, { floppyRotationalGain: v }))),
    );

    // bend limit
    const limitOn = el("input", { type: "checkbox" });
    limitOn.checked = s.params.thetaMax !== null;
    const limitDeg = el("input", { type: "range", min: "0", max: "180", value: String(
      s.params.thetaMax === null ? 45 : Math.round((s.params.thetaMax * 180) / Math.PI),
    ) });
    const applyLimit = () => {
      s.setThetaMax(limitOn.checked ? (Number(limitDeg.value) * Math.PI) / 180 : null);
      this.invalidate();
    };
    limitOn.addEventListener("change", applyLimit);
    limitDeg.addEventListener("change", applyLimit);
    p.append(el("h3", { text: "bend limit" }), labeled("enabled", limitOn), labeled("degrees", limitDeg));

    // static velocity spec
    if (this.viewMode === "static") {
      const fields: HTMLInputElement[] = [];
      const mk = (v: number): HTMLInputElement => {
        const input = el("input", { type: "number", step: "0.5", value: String(v) });
        input.addEventListener("change", applySpec);
        fields.push(input);
        return input;
      };
      const ang = s.velocitySpec.angular[i];
      const lin = s.velocitySpec.linear[i];
      const applySpec = () => {
        s.setBoneVelocity(
          i,
          [Number(fields[0].value), Number(fields[1].value), Number(fields[2].value)],
          [Number(fields[3].value), Number(fields[4].value), Number(fields[5].value)],
        );
        this.invalidate();
      };
      const trajToggle = el("input", { type: "checkbox" });
      trajToggle.checked = this.showTrajectories;
      trajToggle.addEventListener("change", () => {
        this.showTrajectories = trajToggle.checked;
        this.invalidate();
      });
      p.append(
        el("h3", { text: "velocity spec (selected bone)" }),
        labeled("spin x", mk(ang[0])),
        labeled("spin y", mk(ang[1])),
        labeled("spin z", mk(ang[2])),
        labeled("speed x", mk(lin[0])),
        labeled("speed y", mk(lin[1])),
        labeled("speed z", mk(lin[2])),
        labeled("trajectories", trajToggle),
      );
    }

    // view options
    const ghost = el("input", { type: "checkbox" });
    ghost.checked = this.showGhost;
    ghost.addEventListener("change", () => {
      this.showGhost = ghost.checked;
      this.invalidate();
    });
    p.append(el("h3", { text: "view" }), labeled("plain-skinning ghost", ghost));

    // history and files
    this.undoButton = el("button", { text: "undo" });
    this.undoButton.addEventListener("click", () => {
      if (s.undo()) {
        this.buildPanel();
        this.invalidate();
      }
    });
    this.redoButton = el("button", { text: "redo" });
    this.redoButton.addEventListener("click", () => {
      if (s.redo()) {
        this.buildPanel();
        this.invalidate();
      }
    });
    const save = el("button", { text: "save parameters" });
    save.addEventListener("click", () => {
      const blob = new Blob([s.saveParamsText()], { type: "application/json" });
      const a = el("a", { href: URL.createObjectURL(blob), download: "vs_params.json" });
      a.click();
      URL.revokeObjectURL(a.href);
    });
    const loadParams = el("input", { type: "file", accept: ".json" });
    loadParams.addEventListener("change", async () => {
      const f = loadParams.files?.[0];
      if (f === undefined) return;
      try {
        s.loadParamsText(await f.text());
        this.buildPanel();
        this.invalidate();
      } catch (err) {
        this.status.textContent = `parameter load failed: ${(err as Error).message}`;
      }
    });
    p.append(
      el("h3", { text: "history and files" }),
      el("div", { class: "row" }, this.undoButton, this.redoButton),
      save,
      labeled("load params", loadParams),
    );
    this.refreshUndoButtons();
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) return;
  const app = new App(root);

  const picker = el("input", { type: "file", accept: ".json" });
  picker.addEventListener("change", async () => {
    const f = picker.files?.[0];
    if (f === undefined) return;
    try {
      app.setScene(loadScene(await f.text()), f.name);
    } catch (err) {
      app.status.textContent = `scene load failed: ${(err as Error).message}`;
    }
  });
  root.prepend(el("div", { class: "loader" }, el("span", { text: "scene file: " }), picker));

  // bundled demo scene, when served from the package root
  try {
    const resp = await fetch("tests/fixtures/scene_precomputed.json");
    if (resp.ok) {
      app.setScene(loadScene(await resp.text()), "demo scene");
    }
  } catch {
    // no demo available; the file picker still works
  }
}

void boot();
