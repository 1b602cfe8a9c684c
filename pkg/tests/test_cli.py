import json

import numpy as np
import pytest

from veloskin.assets_io import (
    load_scene,
    precompute_model,
    save_params,
    save_scene,
)
from veloskin.cli import main
from veloskin.geometry import quat_from_axis_angle, quat_identity
from veloskin.kinematics import AnimationClip, Track
from veloskin.procgen import make_chain_scene
from veloskin.velocity_skinning import VsParams


@pytest.fixture
def chain_path(tmp_path):
    scene = make_chain_scene()
    precompute_model(scene)
    path = tmp_path / "chain.json"
    save_scene(scene, path)
    return path


def _rigid_chain_scene():
    """Chain scene with every vertex snapped to its dominant bone, so the
    per-bone velocity reconstruction is exact up to finite differencing."""
    scene = make_chain_scene()
    for u, pairs in enumerate(scene.mesh.lbs_weights):
        best = max(pairs, key=lambda bw: bw[1])[0]
        scene.mesh.lbs_weights[u] = [(best, 1.0)]
    precompute_model(scene)
    return scene


def _static_scene():
    """Chain scene whose only clip holds a bent pose without moving."""
    scene = make_chain_scene()
    q = quat_from_axis_angle(np.array([0.0, 0, 1.0]), 0.3)
    track = Track(
        bone_index=1,
        times=np.array([0.0, 0.4]),
        rotations=np.array([q, q]),
        translations=np.zeros((2, 3)),
    )
    scene.clips = [AnimationClip(name="hold", duration=0.5, loop=False, tracks=[track])]
    precompute_model(scene)
    return scene


def _read_frames(out_dir):
    return sorted(p for p in out_dir.iterdir() if p.suffix == ".obj")


# ---------------------------------------------------------------------------
# precompute


def test_precompute_writes_derived_data(tmp_path, capsys):
    scene = make_chain_scene()
    src = tmp_path / "raw.json"
    save_scene(scene, src)
    out = tmp_path / "pre.json"
    assert main(["precompute", "--scene", str(src), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert "precomputed" in doc and "phi" in doc["precomputed"]
    assert "precomputed" in capsys.readouterr().out


def test_precompute_is_stable_over_reruns(tmp_path):
    scene = make_chain_scene()
    src = tmp_path / "raw.json"
    save_scene(scene, src)
    first = tmp_path / "one.json"
    second = tmp_path / "two.json"
    main(["precompute", "--scene", str(src), "--out", str(first)])
    # feeding the output back in must not change a byte
    main(["precompute", "--scene", str(first), "--out", str(second)])
    assert first.read_bytes() == second.read_bytes()


def test_cyclic_scene_is_reported(tmp_path, capsys):
    doc = {
        "version": 1,
        "skeleton": {
            "bones": [
                {
                    "name": "loop",
                    "parent_index": 0,
                    "rest_local": {"rotation": [1.0, 0, 0, 0], "translation": [0.0, 0, 0]},
                }
            ]
        },
        "mesh": {"rest_positions": [[0.0, 0, 0]], "triangles": [], "lbs_weights": [[[0, 1.0]]]},
        "clips": [],
    }
    path = tmp_path / "cyclic.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "out.json"
    assert main(["precompute", "--scene", str(path), "--out", str(out)]) == 2
    assert "CyclicHierarchy" in capsys.readouterr().err


def test_missing_scene_file_is_input_error(tmp_path, capsys):
    rc = main(
        ["precompute", "--scene", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o")]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# bake


def test_bake_writes_expected_frame_count(tmp_path, chain_path):
    out = tmp_path / "frames"
    rc = main(
        ["bake", "--scene", str(chain_path), "--clip", "swing", "--fps", "12", "--out", str(out)]
    )
    assert rc == 0
    names = [p.name for p in _read_frames(out)]
    # 0.5 s at 12 fps
    assert names == [f"frame_{k:06d}.obj" for k in range(6)]


def test_bake_static_clip_matches_plain_skinning(tmp_path):
    scene = _static_scene()
    path = tmp_path / "static.json"
    save_scene(scene, path)
    a = tmp_path / "lbs"
    b = tmp_path / "vs"
    assert main(["bake", "--scene", str(path), "--clip", "hold", "--fps", "12",
                 "--mode", "lbs", "--out", str(a)]) == 0
    assert main(["bake", "--scene", str(path), "--clip", "hold", "--fps", "12",
                 "--mode", "vs", "--out", str(b)]) == 0
    for fa, fb in zip(_read_frames(a), _read_frames(b)):
        assert fa.read_bytes() == fb.read_bytes()


def test_bake_zeroed_params_reduce_to_plain_skinning(tmp_path, chain_path):
    scene = load_scene(chain_path)
    zeroed = VsParams.defaults(scene.mesh.num_vertices, len(scene.skeleton))
    pfile = tmp_path / "zero.json"
    save_params(zeroed, pfile)
    a = tmp_path / "lbs"
    b = tmp_path / "vs"
    main(["bake", "--scene", str(chain_path), "--clip", "swing", "--fps", "6",
          "--mode", "lbs", "--out", str(a)])
    main(["bake", "--scene", str(chain_path), "--clip", "swing", "--fps", "6",
          "--mode", "vs", "--params", str(pfile), "--out", str(b)])
    for fa, fb in zip(_read_frames(a), _read_frames(b)):
        assert fa.read_bytes() == fb.read_bytes()


def test_bake_painted_vertices_move_others_stay(tmp_path, chain_path):
    scene = load_scene(chain_path)
    n = scene.mesh.num_vertices
    params = VsParams.defaults(n, len(scene.skeleton))
    params.squash_on[:] = False
    painted = list(range(12))
    params.k_floppy[painted] = 0.5
    pfile = tmp_path / "painted.json"
    save_params(params, pfile)
    a = tmp_path / "lbs"
    b = tmp_path / "vs"
    main(["bake", "--scene", str(chain_path), "--clip", "swing", "--fps", "12",
          "--mode", "lbs", "--out", str(a)])
    main(["bake", "--scene", str(chain_path), "--clip", "swing", "--fps", "12",
          "--mode", "vs", "--params", str(pfile), "--out", str(b)])
    any_painted_moved = False
    for fa, fb in zip(_read_frames(a), _read_frames(b)):
        la = fa.read_text().splitlines()
        lb = fb.read_text().splitlines()
        # unpainted vertices carry zero stiffness, so their rows are untouched
        for v in range(n):
            if v not in painted:
                assert la[v] == lb[v]
        if any(la[v] != lb[v] for v in painted):
            any_painted_moved = True
    assert any_painted_moved


def test_bake_missing_clip_is_input_error(tmp_path, chain_path, capsys):
    rc = main(["bake", "--scene", str(chain_path), "--clip", "nope", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "no clip named" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# validate


def test_validate_passes_on_rigid_binding(tmp_path, capsys):
    path = tmp_path / "rigid.json"
    save_scene(_rigid_chain_scene(), path)
    rc = main(["validate", "--scene", str(path), "--clip", "swing"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out
    assert out.count("max_rel") >= 5


def test_validate_fails_on_corrupted_propagation(tmp_path, capsys):
    scene = _rigid_chain_scene()
    # drop one bone's propagated column: its spin goes missing from the
    # reconstruction and the mismatch is far beyond threshold
    scene.precomputed.phi[:, 1] = 0.0
    path = tmp_path / "broken.json"
    save_scene(scene, path)
    rc = main(["validate", "--scene", str(path), "--clip", "swing"])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_validate_static_clip_reports_zero_error(tmp_path, capsys):
    scene = _static_scene()
    path = tmp_path / "static.json"
    save_scene(scene, path)
    rc = main(["validate", "--scene", str(path), "--clip", "hold"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "worst max_rel 0.000e+00" in out


def test_validate_missing_clip_is_input_error(tmp_path, chain_path, capsys):
    rc = main(["validate", "--scene", str(chain_path), "--clip", "ghost"])
    assert rc == 2
    assert "no clip named" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# bench


def test_bench_emits_parseable_csv(tmp_path, chain_path):
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--scene", str(chain_path), "--clip", "swing", "--fps", "24",
               "--reps", "3", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "mode,vertices,bones,frames,instances,reps,median_ms,mean_ms"
    lbs = lines[1].split(",")
    vs = lines[2].split(",")
    ratio = lines[3].split(",")
    assert lbs[0] == "lbs" and vs[0] == "vs" and ratio[0] == "ratio"
    lbs_median = float(lbs[6])
    vs_median = float(vs[6])
    assert lbs_median > 0.0
    # the full deformation does a superset of the plain skinning work
    assert vs_median >= lbs_median
    assert abs(float(ratio[6]) - vs_median / lbs_median) < 0.01


# ---------------------------------------------------------------------------
# trajectory


def _write_spec(tmp_path, doc):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return path


def test_trajectory_samples_selected_vertices(tmp_path, chain_path):
    spec = _write_spec(
        tmp_path, {"pose": "rest", "velocities": {"1": {"angular": [0.0, 0, 2.0]}}}
    )
    out = tmp_path / "traj.json"
    rc = main(["trajectory", "--scene", str(chain_path), "--spec", str(spec),
               "--vertices", "0,5", "--samples", "4", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["vertices"] == [0, 5]
    assert doc["samples"] == 4
    assert len(doc["polylines"]) == 2
    assert all(len(line) == 4 for line in doc["polylines"])


def test_trajectory_zero_velocities_degenerate(tmp_path, chain_path):
    spec = _write_spec(tmp_path, {"pose": "rest", "velocities": {}})
    out = tmp_path / "traj.json"
    rc = main(["trajectory", "--scene", str(chain_path), "--spec", str(spec),
               "--vertices", "3", "--samples", "5", "--out", str(out)])
    assert rc == 0
    line = json.loads(out.read_text())["polylines"][0]
    assert all(p == line[0] for p in line)


def test_trajectory_posed_start_differs_from_rest(tmp_path, chain_path):
    q = quat_from_axis_angle(np.array([0.0, 0, 1.0]), 0.8)
    spec = _write_spec(
        tmp_path,
        {"pose": {"1": {"rotation": [float(x) for x in q]}}, "velocities": {}},
    )
    out = tmp_path / "traj.json"
    main(["trajectory", "--scene", str(chain_path), "--spec", str(spec),
          "--vertices", "all", "--samples", "2", "--out", str(out)])
    doc = json.loads(out.read_text())
    scene = load_scene(chain_path)
    starts = np.array([line[0] for line in doc["polylines"]])
    assert np.abs(starts - scene.mesh.rest_positions).max() > 0.05


def test_trajectory_bad_vertex_index(tmp_path, chain_path, capsys):
    spec = _write_spec(tmp_path, {"pose": "rest", "velocities": {}})
    rc = main(["trajectory", "--scene", str(chain_path), "--spec", str(spec),
               "--vertices", "0,99999"])
    assert rc == 2
    assert "out of range" in capsys.readouterr().err


def test_trajectory_bad_bone_in_spec(tmp_path, chain_path, capsys):
    spec = _write_spec(tmp_path, {"pose": "rest", "velocities": {"9": {"angular": [1.0, 0, 0]}}})
    rc = main(["trajectory", "--scene", str(chain_path), "--spec", str(spec)])
    assert rc == 2
    assert "out of range" in capsys.readouterr().err


def test_trajectory_missing_spec_file(tmp_path, chain_path, capsys):
    rc = main(["trajectory", "--scene", str(chain_path), "--spec", str(tmp_path / "no.json")])
    assert rc == 2
    assert "cannot read spec" in capsys.readouterr().err
