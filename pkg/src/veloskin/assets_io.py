"""Scene documents, parameter files and OBJ export.

A scene is a single JSON document with the keys version, skeleton, mesh,
clips, vs_params and precomputed. Quaternions are scalar-first [w,x,y,z],
angles radians, times seconds. Skinning weights and propagated weights are
stored as per-vertex (bone_index, value) pairs. Floats survive a save/load
round trip bit-exactly because serialization uses Python's shortest
round-trip float repr.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ReferentialIntegrityError, VersionMismatchError
from .geometry import RigidTransform, quat_normalize
from .kinematics import AnimationClip, Track
from .rig import (
    Bone,
    BoneGeometry,
    Skeleton,
    SkinnedMesh,
    compute_bone_centroids,
    compute_vertex_masses,
    normalize_weights,
    propagate_weights_downward,
    propagate_weights_upward,
    validate_skeleton,
)
from .velocity_skinning import VsParams

SCENE_VERSION = 1

QUAT_NORM_TOL = 1e-6


@dataclass(eq=False)
class Precomputed:
    """Per-model quantities derived from the rest state."""

    phi: np.ndarray  # (N, B) subtree-propagated weights
    psi: np.ndarray  # (N, B) ancestor-propagated weights
    masses: np.ndarray  # (N,)
    centroids: np.ndarray  # (B, 3)


@dataclass(eq=False)
class SceneFile:
    skeleton: Skeleton
    mesh: SkinnedMesh
    clips: list[AnimationClip]
    vs_params: VsParams
    precomputed: Precomputed | None = None
    load_warnings: list[str] = field(default_factory=list)

    def clip(self, name: str) -> AnimationClip:
        for c in self.clips:
            if c.name == name:
                return c
        raise KeyError(f"no clip named {name!r}")

    def rest_geometry(self) -> BoneGeometry:
        if self.precomputed is None:
            raise ValueError("scene has no precomputed data; run precompute first")
        return BoneGeometry(
            centroids=self.precomputed.centroids,
            origins=self.skeleton.rest_origins(),
        )


# ===========================================================================
# parsing helpers
# ===========================================================================


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ParseError(f"{path}: expected an object")
    if key not in d:
        raise ParseError(f"{path}: missing required key {key!r}")
    return d[key]


def _array(value, path: str, shape: tuple, dtype=float) -> np.ndarray:
    try:
        arr = np.array(value, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{path}: {e}") from None
    expect = tuple(s for s in shape)
    if arr.ndim != len(expect) or any(
        e is not None and a != e for a, e in zip(arr.shape, expect)
    ):
        raise ParseError(f"{path}: expected shape {expect}, got {arr.shape}")
    if dtype is float and arr.size and not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: contains non-finite values")
    return arr


def _unit_quat(value, path: str, warnings: list[str]) -> np.ndarray:
    q = _array(value, path, (4,))
    n = float(np.linalg.norm(q))
    # renormalize only clearly off-unit values; within tolerance the stored
    # bits are kept so a load/save cycle reproduces the file exactly
    if abs(n - 1.0) > QUAT_NORM_TOL:
        warnings.append(f"{path}: quaternion norm {n:.9g}, renormalized")
        return quat_normalize(q)
    return q


def _pairs(value, path: str, limit: int, what: str) -> list[tuple[int, float]]:
    out = []
    if not isinstance(value, list):
        raise ParseError(f"{path}: expected a list of (index, value) pairs")
    for j, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError(f"{path}[{j}]: expected an (index, value) pair")
        idx, v = pair
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise ParseError(f"{path}[{j}]: index must be an integer")
        if not 0 <= idx < limit:
            raise ReferentialIntegrityError(
                f"{path}[{j}]: {what} index {idx} outside [0, {limit})"
            )
        out.append((idx, float(v)))
    return out


# ===========================================================================
# scene load / save
# ===========================================================================


def _parse_skeleton(doc, warnings: list[str]) -> Skeleton:
    bones_doc = _need(doc, "bones", "skeleton")
    if not isinstance(bones_doc, list) or not bones_doc:
        raise ParseError("skeleton.bones: expected a non-empty list")
    bones = []
    for i, b in enumerate(bones_doc):
        path = f"skeleton.bones[{i}]"
        rest = _need(b, "rest_local", path)
        bones.append(
            Bone(
                name=str(_need(b, "name", path)),
                parent_index=int(_need(b, "parent_index", path)),
                rest_local=RigidTransform(
                    _unit_quat(_need(rest, "rotation", path), f"{path}.rotation", warnings),
                    _array(_need(rest, "translation", path), f"{path}.translation", (3,)),
                ),
            )
        )
    skeleton = Skeleton(bones)
    validate_skeleton(skeleton)
    return skeleton


def _parse_mesh(doc, num_bones: int, warnings: list[str]) -> SkinnedMesh:
    positions = _array(_need(doc, "rest_positions", "mesh"), "mesh.rest_positions", (None, 3))
    triangles = _array(
        _need(doc, "triangles", "mesh"), "mesh.triangles", (None, 3), dtype=np.int64
    )
    n = len(positions)
    if triangles.size and (triangles.min() < 0 or triangles.max() >= n):
        raise ReferentialIntegrityError(
            f"mesh.triangles: vertex index outside [0, {n})"
        )
    weights_doc = _need(doc, "lbs_weights", "mesh")
    if not isinstance(weights_doc, list) or len(weights_doc) != n:
        raise ParseError(f"mesh.lbs_weights: expected one entry per vertex ({n})")
    weights = [
        _pairs(w, f"mesh.lbs_weights[{u}]", num_bones, "bone")
        for u, w in enumerate(weights_doc)
    ]
    mesh = SkinnedMesh(rest_positions=positions, triangles=triangles, lbs_weights=weights)
    try:
        warnings.extend(normalize_weights(mesh, num_bones))
    except (ValueError, IndexError) as e:
        raise ParseError(f"mesh.lbs_weights: {e}") from None
    return mesh


def _parse_clip(doc, index: int, num_bones: int, warnings: list[str]) -> AnimationClip:
    path = f"clips[{index}]"
    duration = float(_need(doc, "duration", path))
    if not np.isfinite(duration) or duration < 0.0:
        raise ParseError(f"{path}.duration: must be finite and >= 0")
    tracks_doc = _need(doc, "tracks", path)
    if not isinstance(tracks_doc, list):
        raise ParseError(f"{path}.tracks: expected a list")
    tracks = []
    seen = set()
    for j, tr in enumerate(tracks_doc):
        tpath = f"{path}.tracks[{j}]"
        bone = int(_need(tr, "bone_index", tpath))
        if not 0 <= bone < num_bones:
            raise ReferentialIntegrityError(
                f"{tpath}.bone_index: {bone} outside [0, {num_bones})"
            )
        if bone in seen:
            raise ParseError(f"{tpath}: duplicate track for bone {bone}")
        seen.add(bone)
        times = _array(_need(tr, "times", tpath), f"{tpath}.times", (None,))
        if len(times) == 0:
            raise ParseError(f"{tpath}.times: track has no keys")
        if np.any(np.diff(times) <= 0.0):
            raise ParseError(f"{tpath}.times: must be strictly increasing")
        rotations = _array(
            _need(tr, "rotations", tpath), f"{tpath}.rotations", (len(times), 4)
        )
        rotations = np.array(
            [
                _unit_quat(q, f"{tpath}.rotations[{k}]", warnings)
                for k, q in enumerate(rotations)
            ]
        )
        translations = _array(
            _need(tr, "translations", tpath), f"{tpath}.translations", (len(times), 3)
        )
        tracks.append(
            Track(bone_index=bone, times=times, rotations=rotations, translations=translations)
        )
    return AnimationClip(
        name=str(_need(doc, "name", path)),
        duration=duration,
        loop=bool(_need(doc, "loop", path)),
        tracks=tracks,
    )


def _parse_vs_params(doc, n: int, num_bones: int) -> VsParams:
    params = VsParams.defaults(n, num_bones)
    if doc is None:
        return params
    params.k_squash = _array(_need(doc, "k_squash", "vs_params"), "vs_params.k_squash", (n,))
    params.k_floppy = _array(_need(doc, "k_floppy", "vs_params"), "vs_params.k_floppy", (n,))
    theta_max = doc.get("theta_max")
    if theta_max is not None:
        theta_max = float(theta_max)
        if not np.isfinite(theta_max) or theta_max < 0.0:
            raise ParseError("vs_params.theta_max: must be finite and >= 0")
    params.theta_max = theta_max
    bones_doc = _need(doc, "bones", "vs_params")
    if not isinstance(bones_doc, list) or len(bones_doc) != num_bones:
        raise ParseError(f"vs_params.bones: expected one entry per bone ({num_bones})")
    for i, b in enumerate(bones_doc):
        path = f"vs_params.bones[{i}]"
        params.squash_on[i] = bool(_need(b, "squash_on", path))
        params.floppy_on[i] = bool(_need(b, "floppy_on", path))
        params.squash_translational_gain[i] = float(b.get("squash_translational_gain", 1.0))
        params.squash_rotational_gain[i] = float(b.get("squash_rotational_gain", 1.0))
        params.floppy_translational_gain[i] = float(b.get("floppy_translational_gain", 1.0))
        params.floppy_rotational_gain[i] = float(b.get("floppy_rotational_gain", 1.0))
        mode = b.get("squash_mode", "axis")
        if mode not in ("axis", "point"):
            raise ParseError(f"{path}.squash_mode: expected 'axis' or 'point', got {mode!r}")
        params.squash_point_mode[i] = mode == "point"
        params.centroid_offsets[i] = _array(
            b.get("centroid_offset", [0.0, 0.0, 0.0]), f"{path}.centroid_offset", (3,)
        )
    return params


def _sparse_to_dense(doc, path: str, n: int, num_bones: int) -> np.ndarray:
    if not isinstance(doc, list) or len(doc) != n:
        raise ParseError(f"{path}: expected one entry per vertex ({n})")
    out = np.zeros((n, num_bones))
    for u, pairs in enumerate(doc):
        for bone, v in _pairs(pairs, f"{path}[{u}]", num_bones, "bone"):
            out[u, bone] = v
    return out


def _parse_precomputed(doc, n: int, num_bones: int) -> Precomputed:
    return Precomputed(
        phi=_sparse_to_dense(_need(doc, "phi", "precomputed"), "precomputed.phi", n, num_bones),
        psi=_sparse_to_dense(_need(doc, "psi", "precomputed"), "precomputed.psi", n, num_bones),
        masses=_array(_need(doc, "masses", "precomputed"), "precomputed.masses", (n,)),
        centroids=_array(
            _need(doc, "centroids", "precomputed"), "precomputed.centroids", (num_bones, 3)
        ),
    )


def parse_scene(doc: dict) -> SceneFile:
    """Build a SceneFile from a decoded JSON document, validating structure,
    references and weight normalization."""
    warnings: list[str] = []
    version = _need(doc, "version", "scene")
    if not isinstance(version, int) or isinstance(version, bool):
        raise ParseError("scene.version: expected an integer")
    if version != SCENE_VERSION:
        raise VersionMismatchError(
            f"scene version {version} not supported (expected {SCENE_VERSION})"
        )
    skeleton = _parse_skeleton(_need(doc, "skeleton", "scene"), warnings)
    mesh = _parse_mesh(_need(doc, "mesh", "scene"), len(skeleton), warnings)
    clips_doc = _need(doc, "clips", "scene")
    if not isinstance(clips_doc, list):
        raise ParseError("scene.clips: expected a list")
    names = set()
    clips = []
    for i, c in enumerate(clips_doc):
        clip = _parse_clip(c, i, len(skeleton), warnings)
        if clip.name in names:
            raise ParseError(f"clips[{i}]: duplicate clip name {clip.name!r}")
        names.add(clip.name)
        clips.append(clip)
    vs_params = _parse_vs_params(doc.get("vs_params"), mesh.num_vertices, len(skeleton))
    pre = doc.get("precomputed")
    precomputed = (
        _parse_precomputed(pre, mesh.num_vertices, len(skeleton)) if pre is not None else None
    )
    return SceneFile(
        skeleton=skeleton,
        mesh=mesh,
        clips=clips,
        vs_params=vs_params,
        precomputed=precomputed,
        load_warnings=warnings,
    )


def load_scene(path: str | Path) -> SceneFile:
    """Read and validate a scene document.

    Raises:
        ParseError: malformed JSON or structure (message carries the field path).
        VersionMismatchError: unsupported version value.
        ReferentialIntegrityError: an index points outside its table.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    return parse_scene(doc)


def _vec(a: np.ndarray) -> list:
    return [float(x) for x in a]


def _dense_to_sparse(dense: np.ndarray, threshold: float = 0.0) -> list:
    out = []
    for row in dense:
        idx = np.nonzero(row > threshold)[0]
        out.append([[int(i), float(row[i])] for i in idx])
    return out


def scene_to_doc(scene: SceneFile) -> dict:
    doc: dict = {
        "version": SCENE_VERSION,
        "skeleton": {
            "bones": [
                {
                    "name": b.name,
                    "parent_index": b.parent_index,
                    "rest_local": {
                        "rotation": _vec(b.rest_local.rotation),
                        "translation": _vec(b.rest_local.translation),
                    },
                }
                for b in scene.skeleton.bones
            ]
        },
        "mesh": {
            "rest_positions": [_vec(p) for p in scene.mesh.rest_positions],
            "triangles": [[int(i) for i in t] for t in scene.mesh.triangles],
            "lbs_weights": [
                [[int(b), float(w)] for b, w in pairs] for pairs in scene.mesh.lbs_weights
            ],
        },
        "clips": [
            {
                "name": c.name,
                "duration": float(c.duration),
                "loop": bool(c.loop),
                "tracks": [
                    {
                        "bone_index": tr.bone_index,
                        "times": _vec(tr.times),
                        "rotations": [_vec(q) for q in tr.rotations],
                        "translations": [_vec(x) for x in tr.translations],
                    }
                    for tr in c.tracks
                ],
            }
            for c in scene.clips
        ],
        "vs_params": params_to_doc(scene.vs_params),
    }
    if scene.precomputed is not None:
        pre = scene.precomputed
        doc["precomputed"] = {
            "phi": _dense_to_sparse(pre.phi),
            "psi": _dense_to_sparse(pre.psi),
            "masses": _vec(pre.masses),
            "centroids": [_vec(c) for c in pre.centroids],
        }
    return doc


def save_scene(scene: SceneFile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_doc(scene), separators=(",", ": ")))


# ===========================================================================
# standalone parameter files (written by the authoring UI)
# ===========================================================================


def params_to_doc(params: VsParams) -> dict:
    return {
        "k_squash": _vec(params.k_squash),
        "k_floppy": _vec(params.k_floppy),
        "theta_max": None if params.theta_max is None else float(params.theta_max),
        "bones": [
            {
                "squash_on": bool(params.squash_on[i]),
                "floppy_on": bool(params.floppy_on[i]),
                "squash_translational_gain": float(params.squash_translational_gain[i]),
                "squash_rotational_gain": float(params.squash_rotational_gain[i]),
                "floppy_translational_gain": float(params.floppy_translational_gain[i]),
                "floppy_rotational_gain": float(params.floppy_rotational_gain[i]),
                "squash_mode": "point" if params.squash_point_mode[i] else "axis",
                "centroid_offset": _vec(params.centroid_offsets[i]),
            }
            for i in range(len(params.squash_on))
        ],
    }


def save_params(params: VsParams, path: str | Path) -> None:
    doc = {"version": SCENE_VERSION, "vs_params": params_to_doc(params)}
    Path(path).write_text(json.dumps(doc, separators=(",", ": ")))


def load_params(path: str | Path, num_vertices: int, num_bones: int) -> VsParams:
    """Read a standalone parameter file saved by the authoring tool."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    version = _need(doc, "version", "params")
    if version != SCENE_VERSION:
        raise VersionMismatchError(f"params version {version} not supported")
    return _parse_vs_params(_need(doc, "vs_params", "params"), num_vertices, num_bones)


# ===========================================================================
# precompute
# ===========================================================================


def precompute_model(scene: SceneFile) -> SceneFile:
    """Fill scene.precomputed from the rest state.

    Deterministic in the inputs, so running it again reproduces the same
    arrays.
    """
    phi = propagate_weights_upward(scene.mesh, scene.skeleton)
    psi = propagate_weights_downward(scene.mesh, scene.skeleton)
    masses = compute_vertex_masses(scene.mesh)
    centroids = compute_bone_centroids(
        scene.mesh, psi, masses, scene.skeleton.rest_origins()
    )
    scene.precomputed = Precomputed(phi=phi, psi=psi, masses=masses, centroids=centroids)
    return scene


# ===========================================================================
# OBJ
# ===========================================================================


def load_obj(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Minimal OBJ reader: v and f records only, faces fan-triangulated.

    Raises:
        ParseError: malformed records or out-of-range indices.
    """
    positions = []
    faces = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
            try:
                positions.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad vertex coordinate") from None
        elif parts[0] == "f":
            try:
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad face index") from None
            if len(idx) < 3:
                raise ParseError(f"{path}:{lineno}: face needs at least 3 vertices")
            if any(i < 1 for i in idx):
                raise ParseError(f"{path}:{lineno}: face indices must be positive")
            for a, b in zip(idx[1:], idx[2:]):
                faces.append([idx[0] - 1, a - 1, b - 1])
    pos = np.array(positions, dtype=float) if positions else np.zeros((0, 3))
    tris = np.array(faces, dtype=np.int64) if faces else np.zeros((0, 3), dtype=np.int64)
    if tris.size and tris.max() >= len(pos):
        raise ParseError(f"{path}: face references vertex {int(tris.max()) + 1} of {len(pos)}")
    return pos, tris


def write_obj(path: str | Path, positions: np.ndarray, triangles: np.ndarray) -> None:
    """One mesh snapshot. Floats use the shortest exact decimal form so
    identical inputs always produce identical bytes. Negative zeros are
    folded into +0 so numerically equal frames stay byte-equal."""
    chunks = []
    for p in positions:
        x, y, z = float(p[0]) + 0.0, float(p[1]) + 0.0, float(p[2]) + 0.0
        chunks.append(f"v {x!r} {y!r} {z!r}\n")
    for t in triangles:
        chunks.append(f"f {int(t[0]) + 1} {int(t[1]) + 1} {int(t[2]) + 1}\n")
    Path(path).write_text("".join(chunks))


def export_obj_sequence(
    frames: np.ndarray, triangles: np.ndarray, out_dir: str | Path
) -> list[Path]:
    """Write frames (F, N, 3) as out_dir/frame_%06d.obj, shared topology."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, frame in enumerate(frames):
        p = out / f"frame_{k:06d}.obj"
        write_obj(p, frame, triangles)
        paths.append(p)
    return paths
