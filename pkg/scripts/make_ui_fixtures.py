"""Generate the expectation fixtures consumed by the frontend test suite.

The browser studio re-implements the deformation pipeline in TypeScript.
Its tests do not trust that port: every numeric path is checked against
values produced here by the reference implementation, and the parameter
files it writes are compared byte for byte against files written by
save_params. Run this after any change to the core math and commit the
refreshed fixtures together with it.

The bake block additionally runs the real `bake` subcommand so the
round-trip test (paint in the studio, save, bake with the CLI, compare
against the live view) checks the actual command, not a reenactment.
"""
from __future__ import annotations

import argparse
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np

from veloskin.assets_io import load_obj, save_params, save_scene
from veloskin.assets_io import precompute_model
from veloskin.cli import main as cli_main
from veloskin.kinematics import bone_velocities_analytic, evaluate_pose
from veloskin.procgen import make_chain_scene
from veloskin.rig import posed_bone_geometry
from veloskin.velocity_skinning import VsParams, deform_mesh, trace_trajectories

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

# brush strokes applied on top of the scene's painted defaults; the studio
# applies the same strokes through its paint op and must land on the same
# parameter file byte for byte
STROKES = [
    {"target": "k_floppy", "center": [0.0, 1.4, 0.1], "radius": 0.3, "sign": 1, "strength": 0.2},
    {"target": "k_floppy", "center": [-0.1, 0.9, 0.0], "radius": 0.25, "sign": 1, "strength": 0.15},
    {"target": "k_squash", "center": [0.05, 0.5, -0.05], "radius": 0.35, "sign": -1, "strength": 0.1},
]
PAINT_MIN = -10.0
PAINT_MAX = 10.0


def apply_strokes(params: VsParams, positions: np.ndarray) -> None:
    """Reference paint rule, kept in exact arithmetic lockstep with the
    studio: per stroke, ascending vertex order, squared-distance test,
    (1 - (d/r)^2)^2 falloff, then clamp."""
    for stroke in STROKES:
        k = params.k_squash if stroke["target"] == "k_squash" else params.k_floppy
        center = stroke["center"]
        r2 = stroke["radius"] * stroke["radius"]
        for u in range(len(positions)):
            dx = positions[u, 0] - center[0]
            dy = positions[u, 1] - center[1]
            dz = positions[u, 2] - center[2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < r2:
                a = 1.0 - d2 / r2
                v = k[u] + stroke["sign"] * stroke["strength"] * (a * a)
                k[u] = min(max(v, PAINT_MIN), PAINT_MAX)


def pose_doc(pose) -> dict:
    return {
        "rotations": pose.rotations.tolist(),
        "translations": pose.translations.tolist(),
    }


def kin_doc(kin) -> dict:
    return {"angular": kin.angular.tolist(), "linear": kin.linear.tolist()}


def params_fixture_doc(params: VsParams) -> dict:
    """Same layout as the vs_params block of a scene file."""
    from veloskin.assets_io import params_to_doc

    return params_to_doc(params)


def clone_params(params: VsParams) -> VsParams:
    return VsParams(
        k_squash=params.k_squash.copy(),
        k_floppy=params.k_floppy.copy(),
        squash_on=params.squash_on.copy(),
        floppy_on=params.floppy_on.copy(),
        squash_translational_gain=params.squash_translational_gain.copy(),
        squash_rotational_gain=params.squash_rotational_gain.copy(),
        floppy_translational_gain=params.floppy_translational_gain.copy(),
        floppy_rotational_gain=params.floppy_rotational_gain.copy(),
        squash_point_mode=params.squash_point_mode.copy(),
        centroid_offsets=params.centroid_offsets.copy(),
        theta_max=params.theta_max,
    )


def deform_case(name, scene, pose, kin, params) -> dict:
    frame = deform_mesh(
        scene.mesh,
        scene.skeleton,
        pose,
        kin,
        scene.precomputed.phi,
        params,
        scene.rest_geometry(),
    )
    return {
        "name": name,
        "pose": pose_doc(pose),
        "kin": kin_doc(kin),
        "params": params_fixture_doc(params),
        "lbs_positions": frame.lbs_positions.tolist(),
        "displacements": frame.displacements.tolist(),
        "max_bend_angle": frame.max_bend_angle,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=FIXTURE_DIR)
    args = ap.parse_args()
    out: Path = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    scene = make_chain_scene(num_bones=3, rings=10, segments=8)
    raw = make_chain_scene(num_bones=3, rings=10, segments=8)
    precompute_model(scene)
    pre = scene.precomputed

    # the studio loads this and runs its own precompute
    save_scene(raw, out / "scene.json")
    # variant with the derived block stored, for the loader path that
    # trusts it instead of recomputing
    save_scene(scene, out / "scene_precomputed.json")

    skel = scene.skeleton
    mesh = scene.mesh
    clip = scene.clips[0]
    n = mesh.num_vertices
    B = len(skel)

    # untouched parameter save, for the "no edits" byte comparison
    save_params(scene.vs_params, out / "default_params.json")

    painted = clone_params(scene.vs_params)
    apply_strokes(painted, mesh.rest_positions)
    save_params(painted, out / "painted_params.json")

    expectations: dict = {
        "clip": clip.name,
        "num_vertices": n,
        "num_bones": B,
        "precompute": {
            "phi": pre.phi.tolist(),
            "psi": pre.psi.tolist(),
            "masses": pre.masses.tolist(),
            "centroids": pre.centroids.tolist(),
        },
        "paint": {
            "strokes": STROKES,
            "clamp": [PAINT_MIN, PAINT_MAX],
        },
    }

    # pose sampling and analytic velocities at interior times of both key
    # segments; the studio's finite differences must land on these
    samples = []
    for t in (1.0 / 6.0, 0.35):
        pose = evaluate_pose(clip, skel, t)
        kin = bone_velocities_analytic(clip, skel, t)
        frame = deform_mesh(mesh, skel, pose, kin, pre.phi, scene.vs_params, scene.rest_geometry())
        samples.append(
            {
                "t": t,
                "pose": pose_doc(pose),
                "kin": kin_doc(kin),
                "lbs_positions": frame.lbs_positions.tolist(),
            }
        )
    expectations["clip_samples"] = samples

    # deformation cases covering every effect branch
    cases = []

    t_frame = 1.0 / 6.0
    pose = evaluate_pose(clip, skel, t_frame)
    kin = bone_velocities_analytic(clip, skel, t_frame)
    cases.append(deform_case("clip_defaults", scene, pose, kin, scene.vs_params))

    from veloskin.kinematics import BoneKinematics, Pose

    p_id = Pose.identity(B)

    point = clone_params(scene.vs_params)
    point.k_floppy = np.zeros(n)
    point.floppy_on[:] = False
    point.squash_point_mode[:] = True
    kin_spin = BoneKinematics(
        angular=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 3.0], [1.0, 0.0, 0.0]]),
        linear=np.array([[0.2, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    )
    cases.append(deform_case("point_mode_squash", scene, p_id, kin_spin, point))

    clamped = clone_params(scene.vs_params)
    clamped.k_floppy = np.full(n, 0.8)
    clamped.squash_on[:] = False
    clamped.theta_max = float(np.pi / 4.0)
    kin_fast = BoneKinematics(
        angular=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 9.0]]),
        linear=np.zeros((B, 3)),
    )
    cases.append(deform_case("floppy_clamped", scene, p_id, kin_fast, clamped))

    gains = clone_params(scene.vs_params)
    gains.squash_translational_gain[:] = [1.0, 0.5, 1.5]
    gains.squash_rotational_gain[:] = [1.0, 1.25, 0.75]
    gains.floppy_translational_gain[:] = [1.0, 2.0, 0.5]
    gains.floppy_rotational_gain[:] = [1.0, 0.6, 1.4]
    gains.centroid_offsets[1] = [0.05, 0.0, 0.02]
    gains.centroid_offsets[2] = [0.0, -0.03, 0.0]
    gains.theta_max = 0.6
    pose_g = evaluate_pose(clip, skel, 0.3)
    kin_g = bone_velocities_analytic(clip, skel, 0.3)
    cases.append(deform_case("gains_and_offsets", scene, pose_g, kin_g, gains))

    # offset chosen to land bone 2's posed centroid exactly on its origin,
    # which exercises the degenerate-medial fallback
    degen = clone_params(scene.vs_params)
    degen.k_floppy = np.zeros(n)
    degen.floppy_on[:] = False
    local_c = skel.rest_globals[2].inverse().apply(pre.centroids[2])
    degen.centroid_offsets[2] = -local_c
    cases.append(deform_case("degenerate_medial", scene, p_id, kin_fast, degen))

    # spin parallel to the medial axis leaves the cross-section frame
    # undefined; that bone must contribute nothing
    par = clone_params(scene.vs_params)
    par.k_squash = np.full(n, 0.3)
    par.k_floppy = np.zeros(n)
    par.floppy_on[:] = False
    kin_par = BoneKinematics(
        angular=np.array([[0.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 0.0]]),
        linear=np.zeros((B, 3)),
    )
    cases.append(deform_case("parallel_axes", scene, p_id, kin_par, par))

    expectations["deform_cases"] = cases

    # trajectory ramp at the scrub frame
    verts = [5, 37, n - 1]
    traj = trace_trajectories(
        mesh, skel, pose, kin, pre.phi, scene.vs_params, scene.rest_geometry(),
        np.array(verts), samples=7,
    )
    expectations["trajectories"] = {
        "pose": pose_doc(pose),
        "kin": kin_doc(kin),
        "vertices": verts,
        "samples": 7,
        "expected": traj.tolist(),
    }

    # posed bone geometry with artist offsets
    offsets = np.array([[0.0, 0.0, 0.0], [0.05, 0.0, 0.02], [0.0, -0.03, 0.0]])
    from veloskin.kinematics import forward_kinematics

    geo = posed_bone_geometry(
        skel, forward_kinematics(skel, pose_g), scene.rest_geometry(), offsets
    )
    expectations["posed_geometry"] = {
        "pose": pose_doc(pose_g),
        "offsets": offsets.tolist(),
        "centroids": geo.centroids.tolist(),
        "origins": geo.origins.tolist(),
    }

    # full round trip through the real CLI: bake with the painted file and
    # record the frame the studio will show at the same time
    fps = 12
    frame_index = 2
    tmp = Path(tempfile.mkdtemp(prefix="ui_fixtures_"))
    try:
        scene_path = tmp / "scene.json"
        save_scene(scene, scene_path)
        bake_dir = tmp / "bake"
        rc = cli_main(
            [
                "bake",
                "--scene", str(scene_path),
                "--clip", clip.name,
                "--fps", str(fps),
                "--mode", "vs",
                "--params", str(out / "painted_params.json"),
                "--out", str(bake_dir),
            ]
        )
        if rc != 0:
            raise SystemExit(f"bake failed with exit code {rc}")
        baked, _ = load_obj(bake_dir / f"frame_{frame_index:06d}.obj")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)

    expectations["bake"] = {
        "params_file": "painted_params.json",
        "fps": fps,
        "frame": frame_index,
        "t": frame_index / fps,
        "positions": baked.tolist(),
    }

    path = out / "expectations.json"
    path.write_text(json.dumps(expectations))
    total = sum(f.stat().st_size for f in out.iterdir())
    print(f"wrote {len(list(out.iterdir()))} fixture files to {out} ({total / 1e6:.2f} MB)")


if __name__ == "__main__":
    main()
