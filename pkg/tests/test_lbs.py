import numpy as np
import pytest

from conftest import chain_skeleton, single_vertex_mesh
from veloskin.errors import NonPositiveDtError
from veloskin.geometry import RigidTransform, quat_from_axis_angle, quat_identity
from veloskin.kinematics import AnimationClip, Pose, Track, forward_kinematics
from veloskin.lbs import (
    lbs_deform,
    pose_positions,
    skinning_matrices,
    vertex_velocity_oracle,
)
from veloskin.procgen import random_clip, random_scene
from veloskin.rig import SkinnedMesh


def _mesh(positions, weights) -> SkinnedMesh:
    return SkinnedMesh(
        rest_positions=np.array(positions, dtype=float),
        triangles=np.zeros((0, 3), dtype=np.int64),
        lbs_weights=[sorted(w.items()) for w in weights],
    )


def test_identity_pose_leaves_mesh_at_rest(chain3):
    mesh = _mesh(
        [[0.1, 0.2, 0.3], [0.0, 0.9, 0.0]], [{0: 0.5, 1: 0.5}, {1: 0.2, 2: 0.8}]
    )
    out = pose_positions(mesh, chain3, Pose.identity(3))
    assert np.abs(out - mesh.rest_positions).max() < 1e-12


def test_single_bone_translation_applies_directly():
    mesh = _mesh([[0.3, -0.2, 0.1]], [{0: 1.0}])
    matrices = [
        RigidTransform(rotation=quat_identity(), translation=np.array([1.0, 2.0, 3.0]))
    ]
    out = lbs_deform(mesh, matrices)
    assert np.array_equal(out, [[1.3, 1.8, 3.1]])


def test_half_weights_blend_translations():
    mesh = _mesh([[0.0, 0.0, 0.0]], [{0: 0.5, 1: 0.5}])
    matrices = [
        RigidTransform(rotation=quat_identity(), translation=np.array([1.0, 0, 0])),
        RigidTransform(rotation=quat_identity(), translation=np.zeros(3)),
    ]
    out = lbs_deform(mesh, matrices)
    assert np.allclose(out, [[0.5, 0.0, 0.0]], atol=1e-15)


def test_deformation_linear_in_weights(chain3):
    rng = np.random.default_rng(3)
    positions = rng.normal(size=(40, 3))
    wa = rng.dirichlet(np.ones(3), size=40)
    wb = rng.dirichlet(np.ones(3), size=40)
    lam = 0.3
    blended = lam * wa + (1.0 - lam) * wb

    def run(dense):
        weights = [
            [(b, float(dense[v, b])) for b in range(3) if dense[v, b] > 0.0]
            for v in range(40)
        ]
        mesh = _mesh(positions, [dict(w) for w in weights])
        pose = Pose.identity(3)
        pose.rotations[1] = quat_from_axis_angle(np.array([0.0, 0, 1]), 0.7)
        pose.translations[0] = [0.1, 0.0, -0.3]
        return pose_positions(mesh, chain3, pose)

    out = run(blended)
    expected = lam * run(wa) + (1.0 - lam) * run(wb)
    assert np.abs(out - expected).max() < 1e-12


def test_equivariance_under_global_motion(chain3):
    rng = np.random.default_rng(11)
    positions = rng.normal(size=(25, 3))
    dense = rng.dirichlet(np.ones(3), size=25)
    mesh = _mesh(positions, [{b: dense[v, b] for b in range(3)} for v in range(25)])
    pose = Pose.identity(3)
    pose.rotations[2] = quat_from_axis_angle(np.array([1.0, 0, 0]), 0.4)

    q = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), 1.3)
    world = RigidTransform(rotation=q, translation=np.array([0.5, -1.0, 2.0]))
    base_globals = forward_kinematics(chain3, pose)
    moved_globals = [world.compose(g) for g in base_globals]

    base = lbs_deform(mesh, skinning_matrices(chain3, base_globals))
    moved = lbs_deform(mesh, skinning_matrices(chain3, moved_globals))
    assert np.abs(moved - world.apply(base)).max() < 1e-9


def test_skinning_matrices_identity_pose(chain3):
    mats = skinning_matrices(chain3, forward_kinematics(chain3, Pose.identity(3)))
    for m in mats:
        assert np.allclose(m.rotation, quat_identity(), atol=1e-12)
        assert np.abs(m.translation).max() < 1e-12


def test_skinning_matrices_root_translation_is_pure_shift(chain3):
    pose = Pose.identity(3)
    pose.translations[0] = [0.4, 0.0, -0.6]
    mats = skinning_matrices(chain3, forward_kinematics(chain3, pose))
    for m in mats:
        assert np.allclose(m.rotation, quat_identity(), atol=1e-12)
        assert np.allclose(m.translation, [0.4, 0.0, -0.6], atol=1e-12)


def test_skinning_matrix_frozen_two_bone_bend():
    skeleton = chain_skeleton(2, spacing=1.0)
    pose = Pose.identity(2)
    pose.rotations[1] = quat_from_axis_angle(np.array([0.0, 0, 1]), np.pi / 2)
    mats = skinning_matrices(skeleton, forward_kinematics(skeleton, pose))
    # the joint at (0,1,0) is the pivot: rest points map by a quarter turn about it
    got = mats[1].apply(np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 2.0, 0.0]]))
    assert np.allclose(
        got, [[0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [-1.0, 1.0, 0.0]], atol=1e-12
    )


def test_skinning_matrices_accept_explicit_rest(chain3):
    pose = Pose.identity(3)
    pose.rotations[1] = quat_from_axis_angle(np.array([0.0, 0, 1]), 0.5)
    globals_posed = forward_kinematics(chain3, pose)
    default = skinning_matrices(chain3, globals_posed)
    explicit = skinning_matrices(chain3, globals_posed, chain3.rest_globals)
    for a, b in zip(default, explicit):
        assert np.array_equal(a.rotation, b.rotation)
        assert np.array_equal(a.translation, b.translation)


# ---------------------------------------------------------------------------
# finite-difference vertex velocities


def test_oracle_static_clip_is_exact_zero(chain3):
    mesh = single_vertex_mesh({2: 1.0}, position=(0.0, 1.2, 0.0))
    track = Track(
        bone_index=1,
        times=np.array([0.0, 1.0]),
        rotations=np.tile(quat_from_axis_angle(np.array([0.0, 0, 1]), 0.6), (2, 1)),
        translations=np.zeros((2, 3)),
    )
    clip = AnimationClip(name="hold", duration=1.0, loop=False, tracks=[track])
    vel = vertex_velocity_oracle(mesh, chain3, clip, 0.5, 1e-4)
    assert np.array_equal(vel, np.zeros((1, 3)))


def test_oracle_recovers_rigid_translation(chain3):
    mesh = single_vertex_mesh({0: 1.0}, position=(0.2, 0.1, 0.0))
    track = Track(
        bone_index=0,
        times=np.array([0.0, 1.0]),
        rotations=np.tile(quat_identity(), (2, 1)),
        translations=np.array([[0.0, 0, 0], [1.0, 0, 0]]),
    )
    clip = AnimationClip(name="slide", duration=1.0, loop=False, tracks=[track])
    vel = vertex_velocity_oracle(mesh, chain3, clip, 0.5, 1e-4)
    assert np.allclose(vel, [[1.0, 0.0, 0.0]], atol=1e-9)


def test_oracle_rejects_nonpositive_dt(chain3):
    mesh = single_vertex_mesh({0: 1.0})
    clip = AnimationClip(name="x", duration=1.0, loop=False, tracks=[])
    with pytest.raises(NonPositiveDtError):
        vertex_velocity_oracle(mesh, chain3, clip, 0.5, -1e-4)


def test_oracle_matches_manual_difference_on_random_scene():
    rng = np.random.default_rng(17)
    scene = random_scene(rng, max_bones=5, max_vertices=60)
    clip = scene.clips[0]
    t, dt = 0.37, 1e-4
    from veloskin.kinematics import evaluate_pose

    a = pose_positions(scene.mesh, scene.skeleton, evaluate_pose(clip, scene.skeleton, t))
    b = pose_positions(scene.mesh, scene.skeleton, evaluate_pose(clip, scene.skeleton, t + dt))
    manual = (b - a) / dt
    got = vertex_velocity_oracle(scene.mesh, scene.skeleton, clip, t, dt)
    assert np.abs(got - manual).max() < 1e-9
