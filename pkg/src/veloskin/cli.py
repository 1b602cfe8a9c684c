"""Command line front end.

Subcommands:
    precompute  fill a scene's derived model data and write it back out
    bake        evaluate a clip to an OBJ frame sequence
    validate    check the per-bone velocity decomposition against finite
                differences of the skinned positions
    bench       time plain skinning against the full secondary deformation
    trajectory  trace where chosen vertices travel as velocities ramp up

Exit codes: 0 success, 1 validation failure, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .assets_io import (
    SceneFile,
    export_obj_sequence,
    load_params,
    load_scene,
    precompute_model,
    save_scene,
)
from .errors import VeloskinError
from .kinematics import (
    BoneKinematics,
    Pose,
    bone_velocities_analytic,
    evaluate_pose,
    forward_kinematics,
    smooth_velocities,
)
from .lbs import lbs_deform, skinning_matrices, vertex_velocity_oracle
from .rig import posed_bone_geometry
from .velocity_skinning import deform_mesh, phi_support, trace_trajectories

VALIDATE_THRESHOLD = 1e-3
DEFAULT_DT = 1e-4


def _frame_times(duration: float, fps: float) -> np.ndarray:
    count = max(1, int(round(duration * fps)))
    return np.arange(count) / fps


def _ready(scene: SceneFile) -> SceneFile:
    """Ensure derived model data exists, computing it in memory if absent."""
    if scene.precomputed is None:
        precompute_model(scene)
    return scene


def _load(path: str) -> SceneFile:
    scene = load_scene(path)
    for w in scene.load_warnings:
        print(f"warning: {w}", file=sys.stderr)
    return scene


# ===========================================================================
# subcommands
# ===========================================================================


def cmd_precompute(args: argparse.Namespace) -> int:
    scene = _load(args.scene)
    precompute_model(scene)
    save_scene(scene, args.out)
    print(f"precomputed {args.scene} -> {args.out}")
    return 0


def cmd_bake(args: argparse.Namespace) -> int:
    scene = _ready(_load(args.scene))
    clip = scene.clip(args.clip)
    if args.params:
        scene.vs_params = load_params(
            args.params, scene.mesh.num_vertices, len(scene.skeleton)
        )
    if args.theta_max is not None:
        scene.vs_params.theta_max = args.theta_max
    times = _frame_times(clip.duration, args.fps)
    frames = np.empty((len(times), scene.mesh.num_vertices, 3))
    if args.mode == "lbs":
        for k, t in enumerate(times):
            pose = evaluate_pose(clip, scene.skeleton, float(t))
            globals_posed = forward_kinematics(scene.skeleton, pose)
            frames[k] = lbs_deform(
                scene.mesh, skinning_matrices(scene.skeleton, globals_posed)
            )
    else:
        support = phi_support(scene.precomputed.phi)
        geometry = scene.rest_geometry()
        history: list[BoneKinematics] = []
        for k, t in enumerate(times):
            pose = evaluate_pose(clip, scene.skeleton, float(t))
            history.append(bone_velocities_analytic(clip, scene.skeleton, float(t)))
            kin = smooth_velocities(history, args.smooth_window)
            frame = deform_mesh(
                scene.mesh,
                scene.skeleton,
                pose,
                kin,
                scene.precomputed.phi,
                scene.vs_params,
                geometry,
                support,
            )
            frames[k] = frame.positions
    paths = export_obj_sequence(frames, scene.mesh.triangles, args.out)
    print(f"baked {len(paths)} frames ({args.mode}) -> {args.out}")
    return 0


def _validation_times(scene: SceneFile, clip, samples: int, dt: float) -> list[float]:
    """Sample times strictly inside keyframe intervals.

    Key crossings would mix one-sided derivatives into the oracle, so each
    sample sits inside one interval, spread by a golden-ratio sequence when
    intervals are revisited.
    """
    keys = {0.0, float(clip.duration)}
    for tr in clip.tracks:
        keys.update(float(x) for x in tr.times if 0.0 <= x <= clip.duration)
    ts = sorted(keys)
    intervals = [(a, b) for a, b in zip(ts, ts[1:]) if b - a > 8.0 * dt]
    if not intervals:
        return []
    out = []
    for j in range(samples):
        a, b = intervals[j % len(intervals)]
        frac = 0.05 + (0.5 + 0.618033988749895 * (j // len(intervals))) % 0.9
        out.append(a + frac * (b - a - 4.0 * dt))
    return out


def decomposition_error(scene: SceneFile, clip, t: float, dt: float) -> tuple[float, float]:
    """(max_rel, mean_rel) of the propagated-weight velocity reconstruction
    against the finite-difference oracle at time t.

    Errors are normalized by the frame's peak vertex speed, which keeps the
    measure meaningful at vertices that barely move.
    """
    skeleton = scene.skeleton
    pose = evaluate_pose(clip, skeleton, t)
    kin = bone_velocities_analytic(clip, skeleton, t)
    globals_posed = forward_kinematics(skeleton, pose)
    p = lbs_deform(scene.mesh, skinning_matrices(skeleton, globals_posed))
    phi = scene.precomputed.phi
    pred = np.zeros_like(p)
    for i in range(len(skeleton)):
        col = phi[:, i]
        idx = np.nonzero(col > 0.0)[0]
        if len(idx) == 0:
            continue
        rel = p[idx] - globals_posed[i].translation
        pred[idx] += col[idx, None] * (np.cross(kin.angular[i], rel) + kin.linear[i])
    oracle = vertex_velocity_oracle(scene.mesh, skeleton, clip, t, dt)
    diff = np.linalg.norm(pred - oracle, axis=1)
    scale = max(float(np.max(np.linalg.norm(oracle, axis=1))), 1e-12)
    return float(diff.max() / scale), float(diff.mean() / scale)


def cmd_validate(args: argparse.Namespace) -> int:
    scene = _ready(_load(args.scene))
    clip = scene.clip(args.clip)
    times = _validation_times(scene, clip, args.samples, args.dt)
    if not times:
        print("validate: clip has no usable keyframe intervals", file=sys.stderr)
        return 2
    worst = 0.0
    for t in times:
        max_rel, mean_rel = decomposition_error(scene, clip, t, args.dt)
        worst = max(worst, max_rel)
        print(f"t={t:.6f}  max_rel={max_rel:.3e}  mean_rel={mean_rel:.3e}")
    ok = worst <= VALIDATE_THRESHOLD
    print(
        f"{'PASS' if ok else 'FAIL'}: worst max_rel {worst:.3e} "
        f"(threshold {VALIDATE_THRESHOLD:.0e}, dt {args.dt:g})"
    )
    return 0 if ok else 1


def _time_frames(fn, times, instances: int, reps: int) -> np.ndarray:
    """Per-frame wall times in ms over reps sweeps of the clip."""
    from concurrent.futures import ThreadPoolExecutor

    samples = []
    if instances > 1:
        pool = ThreadPoolExecutor(max_workers=min(instances, 8))
    for _ in range(reps):
        for t in times:
            start = time.perf_counter()
            if instances == 1:
                fn(float(t))
            else:
                list(pool.map(fn, [float(t)] * instances))
            samples.append((time.perf_counter() - start) * 1000.0 / instances)
    if instances > 1:
        pool.shutdown()
    return np.array(samples)


def cmd_bench(args: argparse.Namespace) -> int:
    scene = _ready(_load(args.scene))
    clip = scene.clip(args.clip)
    times = _frame_times(clip.duration, args.fps)
    skeleton = scene.skeleton
    mesh = scene.mesh
    # warm the per-model caches outside the timed region
    mesh.weights_by_bone(len(skeleton))
    support = phi_support(scene.precomputed.phi)
    geometry = scene.rest_geometry()
    phi = scene.precomputed.phi

    def lbs_frame(t: float) -> None:
        pose = evaluate_pose(clip, skeleton, t)
        lbs_deform(mesh, skinning_matrices(skeleton, forward_kinematics(skeleton, pose)))

    def vs_frame(t: float) -> None:
        pose = evaluate_pose(clip, skeleton, t)
        kin = bone_velocities_analytic(clip, skeleton, t)
        deform_mesh(mesh, skeleton, pose, kin, phi, scene.vs_params, geometry, support)

    lbs_frame(0.0)
    vs_frame(0.0)
    lbs_ms = _time_frames(lbs_frame, times, args.instances, args.reps)
    vs_ms = _time_frames(vs_frame, times, args.instances, args.reps)
    ratio = float(np.median(vs_ms) / np.median(lbs_ms))
    rows = [
        "mode,vertices,bones,frames,instances,reps,median_ms,mean_ms",
        f"lbs,{mesh.num_vertices},{len(skeleton)},{len(times)},{args.instances},"
        f"{args.reps},{np.median(lbs_ms):.4f},{lbs_ms.mean():.4f}",
        f"vs,{mesh.num_vertices},{len(skeleton)},{len(times)},{args.instances},"
        f"{args.reps},{np.median(vs_ms):.4f},{vs_ms.mean():.4f}",
        f"ratio,,,,,,{ratio:.4f},",
    ]
    csv = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    print(f"vs/lbs per-frame ratio: {ratio:.3f}", file=sys.stderr)
    return 0


def _parse_pose_spec(doc, scene: SceneFile) -> Pose:
    pose = Pose.identity(len(scene.skeleton))
    if doc == "rest" or doc is None:
        return pose
    if not isinstance(doc, dict):
        raise VeloskinError("trajectory spec: 'pose' must be 'rest' or an object")
    for key, val in doc.items():
        i = int(key)
        if not 0 <= i < len(scene.skeleton):
            raise VeloskinError(f"trajectory spec: bone {i} out of range")
        q = np.asarray(val.get("rotation", [1.0, 0.0, 0.0, 0.0]), dtype=float)
        pose.rotations[i] = q / np.linalg.norm(q)
        pose.translations[i] = np.asarray(val.get("translation", [0.0] * 3), dtype=float)
    return pose


def cmd_trajectory(args: argparse.Namespace) -> int:
    scene = _ready(_load(args.scene))
    if args.params:
        scene.vs_params = load_params(
            args.params, scene.mesh.num_vertices, len(scene.skeleton)
        )
    try:
        spec = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read spec {args.spec}: {e}", file=sys.stderr)
        return 2
    pose = _parse_pose_spec(spec.get("pose"), scene)
    kin = BoneKinematics.zeros(len(scene.skeleton))
    vels = spec.get("velocities", {})
    if not isinstance(vels, dict):
        raise VeloskinError("trajectory spec: 'velocities' must be an object")
    for key, val in vels.items():
        i = int(key)
        if not 0 <= i < len(scene.skeleton):
            raise VeloskinError(f"trajectory spec: bone {i} out of range")
        kin.angular[i] = np.asarray(val.get("angular", [0.0] * 3), dtype=float)
        kin.linear[i] = np.asarray(val.get("linear", [0.0] * 3), dtype=float)
    if args.vertices == "all":
        verts = np.arange(scene.mesh.num_vertices)
    else:
        verts = np.array([int(x) for x in args.vertices.split(",")], dtype=np.intp)
        if verts.size and (verts.min() < 0 or verts.max() >= scene.mesh.num_vertices):
            print("error: vertex index out of range", file=sys.stderr)
            return 2
    polylines = trace_trajectories(
        scene.mesh,
        scene.skeleton,
        pose,
        kin,
        scene.precomputed.phi,
        scene.vs_params,
        scene.rest_geometry(),
        verts,
        samples=args.samples,
    )
    doc = {
        "vertices": [int(v) for v in verts],
        "samples": args.samples,
        "polylines": [[[float(x) for x in p] for p in line] for line in polylines],
    }
    text = json.dumps(doc, separators=(",", ": "))
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


# ===========================================================================
# argument plumbing
# ===========================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veloskin",
        description="Velocity-driven secondary deformation over blend skinning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="fill derived model data")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_precompute)

    p = sub.add_parser("bake", help="evaluate a clip to OBJ frames")
    p.add_argument("--scene", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--mode", choices=("lbs", "vs"), default="vs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--params", help="override vs_params from a parameter file")
    p.add_argument("--theta-max", type=float, default=None, dest="theta_max")
    p.add_argument("--smooth-window", type=int, default=1, dest="smooth_window")
    p.set_defaults(fn=cmd_bake)

    p = sub.add_parser("validate", help="check the velocity decomposition")
    p.add_argument("--scene", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--samples", type=int, default=5)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("bench", help="time lbs against full deformation")
    p.add_argument("--scene", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("trajectory", help="trace velocity ramp trajectories")
    p.add_argument("--scene", required=True)
    p.add_argument("--spec", required=True, help="JSON pose and velocity spec")
    p.add_argument("--vertices", default="all", help="comma-separated indices or 'all'")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--params", help="override vs_params from a parameter file")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_trajectory)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except VeloskinError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except KeyError as e:
        print(f"error: {e.args[0]}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
