#!/usr/bin/env python3
"""Emit a small ready-to-use demo scene for poking at the CLI.

The scene is a three-bone tube with a half-second swing clip, floppy
stiffness painted toward the tip and squash toward the base. Typical
session:

    python scripts/make_demo_scene.py demo.json
    veloskin precompute --scene demo.json --out demo.json
    veloskin validate --scene demo.json --clip swing
    veloskin bake --scene demo.json --clip swing --out frames/
"""
import argparse
import sys

from veloskin.assets_io import precompute_model, save_scene
from veloskin.procgen import make_chain_scene


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="scene JSON path to write")
    parser.add_argument("--bones", type=int, default=3)
    parser.add_argument("--rings", type=int, default=12, help="tube rings per bone")
    parser.add_argument(
        "--precomputed",
        action="store_true",
        help="embed derived model data instead of leaving it to the CLI",
    )
    args = parser.parse_args()
    scene = make_chain_scene(num_bones=args.bones, rings=args.rings)
    if args.precomputed:
        precompute_model(scene)
    save_scene(scene, args.out)
    print(f"wrote {args.out}: {scene.mesh.num_vertices} vertices, "
          f"{len(scene.skeleton)} bones, clip 'swing'")
    return 0


if __name__ == "__main__":
    sys.exit(main())
