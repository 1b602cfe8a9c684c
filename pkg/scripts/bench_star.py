#!/usr/bin/env python3
"""Time plain skinning against the full velocity deformer on the large
procedural star (150k vertices, 12 moving limbs).

Builds the scene in memory, warms the per-model caches, then reports
per-frame medians and the vs/lbs ratio. The same measurement backs the
performance gate in the test suite; this script exists to rerun it with
different knobs when tuning.
"""
import argparse
import sys
import time

import numpy as np

from veloskin.assets_io import precompute_model
from veloskin.kinematics import bone_velocities_analytic, evaluate_pose, forward_kinematics
from veloskin.lbs import lbs_deform, skinning_matrices
from veloskin.procgen import make_star_scene
from veloskin.velocity_skinning import deform_mesh, phi_support


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=12, help="poses sampled per sweep")
    parser.add_argument("--reps", type=int, default=3, help="sweeps per mode, best kept")
    parser.add_argument("--limbs", type=int, default=12)
    args = parser.parse_args()

    build_start = time.perf_counter()
    scene = precompute_model(make_star_scene(limbs=args.limbs))
    skeleton, mesh, clip = scene.skeleton, scene.mesh, scene.clips[0]
    phi = scene.precomputed.phi
    support = phi_support(phi)
    geometry = scene.rest_geometry()
    times = np.arange(args.frames) / float(args.frames)
    poses = [evaluate_pose(clip, skeleton, float(t)) for t in times]
    kins = [bone_velocities_analytic(clip, skeleton, float(t)) for t in times]
    mesh.weights_by_bone(len(skeleton))
    print(
        f"scene: {mesh.num_vertices} vertices, {len(skeleton)} bones, "
        f"built in {time.perf_counter() - build_start:.1f}s",
        file=sys.stderr,
    )

    def lbs_sweep() -> float:
        t0 = time.perf_counter()
        for pose in poses:
            lbs_deform(mesh, skinning_matrices(skeleton, forward_kinematics(skeleton, pose)))
        return time.perf_counter() - t0

    def vs_sweep() -> float:
        t0 = time.perf_counter()
        for pose, kin in zip(poses, kins):
            deform_mesh(mesh, skeleton, pose, kin, phi, scene.vs_params, geometry, support)
        return time.perf_counter() - t0

    lbs_sweep()
    vs_sweep()
    lbs_s = min(lbs_sweep() for _ in range(args.reps))
    vs_s = min(vs_sweep() for _ in range(args.reps))
    lbs_ms = lbs_s * 1000.0 / args.frames
    vs_ms = vs_s * 1000.0 / args.frames
    print(f"lbs  {lbs_ms:8.2f} ms/frame")
    print(f"vs   {vs_ms:8.2f} ms/frame")
    print(f"ratio {vs_ms / lbs_ms:7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
