#!/usr/bin/env python3
"""Regenerate the golden bake fixtures under tests/data/.

Runs the real CLI entry points (precompute, then a vs-mode bake of the
swing clip at 12 fps), so the fixtures pin down the behavior of the whole
pipeline: scene serialization, derived-data precompute, pose evaluation,
analytic velocities and the OBJ writer. Any change that shifts a byte in
these files is meant to be noticed and reviewed.
"""
import argparse
import shutil
import sys
import tempfile
from pathlib import Path

from veloskin.assets_io import save_scene
from veloskin.cli import main as cli_main
from veloskin.procgen import make_golden_scene

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"


def run(data_dir: Path) -> int:
    data_dir.mkdir(parents=True, exist_ok=True)
    scene_path = data_dir / "golden_scene.json"
    frames_dir = data_dir / "golden"
    with tempfile.TemporaryDirectory() as tmp:
        raw = Path(tmp) / "raw.json"
        save_scene(make_golden_scene(), raw)
        rc = cli_main(["precompute", "--scene", str(raw), "--out", str(scene_path)])
        if rc != 0:
            return rc
    if frames_dir.exists():
        shutil.rmtree(frames_dir)
    return cli_main(
        [
            "bake",
            "--scene", str(scene_path),
            "--clip", "swing",
            "--fps", "12",
            "--mode", "vs",
            "--out", str(frames_dir),
        ]
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--data-dir", type=Path, default=DATA_DIR, help="fixture directory to fill"
    )
    args = parser.parse_args()
    return run(args.data_dir)


if __name__ == "__main__":
    sys.exit(main())
