"""Procedural scenes: tube limbs, chains, a star-limbed benchmark body and
seeded random scenes for validation sweeps.

Everything here is deterministic given its arguments (and rng state), so
generated fixtures can back byte-reproducibility tests.
"""
from __future__ import annotations

import numpy as np

from .assets_io import SceneFile, precompute_model
from .geometry import RigidTransform, quat_from_axis_angle, quat_identity, rotation_from_to
from .kinematics import AnimationClip, Track
from .rig import Bone, Skeleton, SkinnedMesh
from .velocity_skinning import VsParams


def tube_mesh(
    origin: np.ndarray,
    direction: np.ndarray,
    length: float,
    radius: float,
    rings: int,
    segments: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Open tube around an axis. Returns (positions, triangles, axis_t)
    where axis_t in [0, 1] is each vertex's parameter along the axis."""
    direction = np.asarray(direction, dtype=float)
    basis = rotation_from_to(np.array([0.0, 1.0, 0.0]), direction)
    t = np.repeat(np.linspace(0.0, 1.0, rings), segments)
    ang = np.tile(np.arange(segments) * (2.0 * np.pi / segments), rings)
    local = np.column_stack(
        [radius * np.cos(ang), t * length, radius * np.sin(ang)]
    )
    positions = local @ basis.T + origin
    tris = []
    for r in range(rings - 1):
        for s in range(segments):
            a = r * segments + s
            b = r * segments + (s + 1) % segments
            c = a + segments
            d = b + segments
            tris.append([a, b, d])
            tris.append([a, d, c])
    return positions, np.array(tris, dtype=np.int64), t


def grid_sphere(center: np.ndarray, radius: float, rows: int, segments: int):
    """UV sphere without pole vertices (open caps), exact rows*segments count."""
    lat = np.repeat(np.linspace(0.35, np.pi - 0.35, rows), segments)
    lon = np.tile(np.arange(segments) * (2.0 * np.pi / segments), rows)
    positions = center + radius * np.column_stack(
        [np.sin(lat) * np.cos(lon), np.cos(lat), np.sin(lat) * np.sin(lon)]
    )
    tris = []
    for r in range(rows - 1):
        for s in range(segments):
            a = r * segments + s
            b = r * segments + (s + 1) % segments
            tris.append([a, b, b + segments])
            tris.append([a, b + segments, a + segments])
    return positions, np.array(tris, dtype=np.int64)


def _track(bone: int, times, rotations, translations) -> Track:
    return Track(
        bone_index=bone,
        times=np.asarray(times, dtype=float),
        rotations=np.asarray(rotations, dtype=float),
        translations=np.asarray(translations, dtype=float),
    )


def _chain_weights(axis_t: np.ndarray, length: float, num_bones: int, spacing: float):
    """Linear blend between the two bones bracketing each height."""
    weights = []
    for t in axis_t:
        h = t * length / spacing
        j = int(min(np.floor(h), num_bones - 1))
        f = float(h - j)
        if j >= num_bones - 1 or f <= 0.0:
            weights.append([(min(j, num_bones - 1), 1.0)])
        else:
            weights.append([(j, 1.0 - f), (j + 1, f)])
    return weights


def make_chain_scene(
    num_bones: int = 3,
    rings: int = 12,
    segments: int = 8,
    spacing: float = 0.5,
    radius: float = 0.12,
) -> SceneFile:
    """Vertical chain of bones inside a tube, linearly blended weights."""
    bones = [Bone("root", -1, RigidTransform.identity())]
    for i in range(1, num_bones):
        bones.append(
            Bone(
                f"bone{i}",
                i - 1,
                RigidTransform(quat_identity(), np.array([0.0, spacing, 0.0])),
            )
        )
    skeleton = Skeleton(bones)
    length = spacing * num_bones
    positions, tris, axis_t = tube_mesh(
        np.zeros(3), np.array([0.0, 1.0, 0.0]), length, radius, rings, segments
    )
    mesh = SkinnedMesh(
        rest_positions=positions,
        triangles=tris,
        lbs_weights=_chain_weights(axis_t, length, num_bones, spacing),
    )
    clip = AnimationClip(
        name="swing",
        duration=0.5,
        loop=False,
        tracks=[
            _track(
                0,
                [0.0, 0.25, 0.5],
                [quat_identity()] * 3,
                [[0.0, 0.0, 0.0], [0.0, 0.15, 0.0], [0.0, 0.0, 0.0]],
            )
        ]
        + [
            _track(
                i,
                [0.0, 0.25, 0.5],
                [
                    quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), a)
                    for a in ((-0.3, 0.5, -0.3) if i % 2 else (0.2, -0.6, 0.2))
                ],
                [[0.0, 0.0, 0.0]] * 3,
            )
            for i in range(1, num_bones)
        ],
    )
    params = VsParams.defaults(len(positions), num_bones)
    h = axis_t
    params.k_floppy = 0.4 * h * h
    params.k_squash = 0.05 + 0.15 * (1.0 - h)
    return SceneFile(
        skeleton=skeleton, mesh=mesh, clips=[clip], vs_params=params, precomputed=None
    )


def make_golden_scene() -> SceneFile:
    """Small fixed arm used for the committed byte-reproducibility frames."""
    return make_chain_scene(num_bones=3, rings=12, segments=8)


def make_star_scene(
    limbs: int = 12,
    limb_rings: int = 1200,
    limb_segments: int = 10,
    body_rows: int = 60,
    body_segments: int = 100,
) -> SceneFile:
    """Star-shaped body: a root sphere with radiating limb tubes, one bone
    per limb. Defaults give exactly 150000 vertices with 12 moving bones.

    Limb vertices blend between the root and their limb bone along the limb
    length; both painted stiffness maps ramp toward the tips.
    """
    rng = np.random.default_rng(1234)
    bones = [Bone("root", -1, RigidTransform.identity())]
    directions = []
    golden = np.pi * (3.0 - np.sqrt(5.0))
    for i in range(limbs):
        z = 1.0 - 2.0 * (i + 0.5) / limbs
        r = np.sqrt(1.0 - z * z)
        a = golden * i
        d = np.array([r * np.cos(a), z, r * np.sin(a)])
        directions.append(d)
        bones.append(Bone(f"limb{i}", 0, RigidTransform(quat_identity(), 0.9 * d)))
    skeleton = Skeleton(bones)

    body_pos, body_tris = grid_sphere(np.zeros(3), 0.8, body_rows, body_segments)
    all_pos = [body_pos]
    all_tris = [body_tris]
    weights: list[list[tuple[int, float]]] = [[(0, 1.0)] for _ in range(len(body_pos))]
    k_floppy = [np.zeros(len(body_pos))]
    k_squash = [np.zeros(len(body_pos))]
    offset = len(body_pos)
    for i, d in enumerate(directions):
        pos, tris, t = tube_mesh(0.9 * d, d, 2.2, 0.16, limb_rings, limb_segments)
        all_pos.append(pos)
        all_tris.append(tris + offset)
        for tv in t:
            w = float(tv)
            if w <= 0.0:
                weights.append([(0, 1.0)])
            else:
                weights.append([(0, 1.0 - w), (i + 1, w)])
        k_floppy.append(0.35 * t)
        k_squash.append(0.2 * t)
        offset += len(pos)

    mesh = SkinnedMesh(
        rest_positions=np.vstack(all_pos),
        triangles=np.vstack(all_tris),
        lbs_weights=weights,
    )
    tracks = []
    for i, d in enumerate(directions):
        axis = np.cross(d, [0.0, 1.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.array([1.0, 0.0, 0.0])
        axis = axis / np.linalg.norm(axis)
        amp = 0.3 + 0.1 * float(rng.random())
        rot = [
            quat_from_axis_angle(axis, a) for a in (-amp, amp, -amp)
        ]
        bob = 0.08 if i % 2 == 0 else 0.0
        tracks.append(
            _track(
                i + 1,
                [0.0, 0.5, 1.0],
                rot,
                [[0.0, 0.0, 0.0], [bob * x for x in d], [0.0, 0.0, 0.0]],
            )
        )
    clip = AnimationClip(name="thrash", duration=1.0, loop=True, tracks=tracks)
    params = VsParams.defaults(mesh.num_vertices, len(skeleton))
    params.k_floppy = np.concatenate(k_floppy)
    params.k_squash = np.concatenate(k_squash)
    return SceneFile(
        skeleton=skeleton, mesh=mesh, clips=[clip], vs_params=params, precomputed=None
    )


# ===========================================================================
# seeded random scenes
# ===========================================================================


def random_skeleton(rng: np.random.Generator, max_bones: int = 6) -> Skeleton:
    num = int(rng.integers(2, max_bones + 1))
    bones = [Bone("root", -1, RigidTransform.identity())]
    for i in range(1, num):
        parent = int(rng.integers(0, i))
        q = quat_from_axis_angle(_random_unit(rng), float(rng.uniform(-0.6, 0.6)))
        t = rng.uniform(-1.0, 1.0, 3)
        bones.append(Bone(f"bone{i}", parent, RigidTransform(q, t)))
    return Skeleton(bones)


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-3:
            return v / n


def random_clip(
    rng: np.random.Generator,
    num_bones: int,
    duration: float = 1.0,
    keys: int = 3,
    rot_amplitude: float = 0.5,
    trans_amplitude: float = 0.3,
    name: str = "random",
) -> AnimationClip:
    """Every bone gets a track of `keys` random poses around rest.

    rot_amplitude bounds the key angles (radians), so it also bounds how
    far sampled poses stray from the rest pose.
    """
    times = np.linspace(0.0, duration, keys)
    tracks = []
    for b in range(num_bones):
        rot = [
            quat_from_axis_angle(_random_unit(rng), float(rng.uniform(-rot_amplitude, rot_amplitude)))
            for _ in range(keys)
        ]
        trans = rng.uniform(-trans_amplitude, trans_amplitude, (keys, 3))
        tracks.append(_track(b, times, rot, trans))
    return AnimationClip(name=name, duration=duration, loop=False, tracks=tracks)


def random_scene(
    rng: np.random.Generator,
    max_bones: int = 6,
    max_vertices: int = 200,
    rot_amplitude: float = 0.5,
    trans_amplitude: float = 0.3,
) -> SceneFile:
    """Random tree skeleton, random cloud mesh with random normalized
    weights, one random clip. Triangles are arbitrary triples; they only
    need to give the vertices surface mass."""
    skeleton = random_skeleton(rng, max_bones)
    n = int(rng.integers(30, max_vertices + 1))
    positions = rng.normal(scale=1.2, size=(n, 3))
    triangles = rng.integers(0, n, (2 * n, 3)).astype(np.int64)
    weights = []
    num_bones = len(skeleton)
    for _ in range(n):
        count = int(rng.integers(1, min(3, num_bones) + 1))
        idx = rng.choice(num_bones, size=count, replace=False)
        vals = rng.dirichlet(np.ones(count))
        weights.append(sorted(zip(idx.tolist(), vals.tolist())))
    mesh = SkinnedMesh(rest_positions=positions, triangles=triangles, lbs_weights=weights)
    clip = random_clip(
        rng, num_bones, rot_amplitude=rot_amplitude, trans_amplitude=trans_amplitude
    )
    params = VsParams.defaults(n, num_bones)
    params.k_squash = rng.uniform(0.0, 0.4, n)
    params.k_floppy = rng.uniform(0.0, 0.4, n)
    scene = SceneFile(
        skeleton=skeleton, mesh=mesh, clips=[clip], vs_params=params, precomputed=None
    )
    return precompute_model(scene)
