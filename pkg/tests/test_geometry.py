import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from veloskin.errors import DegenerateDirectionError, ParallelAxesError
from veloskin.geometry import (
    RigidTransform,
    frame_from_primary_secondary,
    project_on_line,
    quat_from_axis_angle,
    quat_identity,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_rotation_vector,
    quat_slerp,
    quat_to_mat3,
    rotation_from_to,
    unit,
)

coord = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(coord, coord, coord).map(lambda t: np.array(t))
nonzero_vec3 = vec3.filter(lambda v: np.linalg.norm(v) > 1e-3)
angle = st.floats(-3.1, 3.1, allow_nan=False)
unit_quat = st.tuples(nonzero_vec3, angle).map(
    lambda t: quat_from_axis_angle(t[0], t[1])
)


# ---------------------------------------------------------------------------
# rotation_from_to


def test_rotation_from_to_identity_case():
    M = rotation_from_to(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    assert np.array_equal(M, np.eye(3))


def test_rotation_from_to_quarter_turn():
    M = rotation_from_to(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]))
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(M, expected, atol=1e-12)


def test_rotation_from_to_antiparallel():
    a = np.array([1.0, 0, 0])
    M = rotation_from_to(a, -a)
    # pi turn about the y axis (first zero component of a)
    assert np.allclose(M, np.diag([-1.0, 1.0, -1.0]), atol=1e-12)
    assert np.allclose(M @ a, -a, atol=1e-12)


def test_rotation_from_to_scales_dont_matter():
    M1 = rotation_from_to(np.array([0.2, 0.5, -1.0]), np.array([3.0, 0.1, 0.4]))
    M2 = rotation_from_to(
        7.0 * np.array([0.2, 0.5, -1.0]), 0.25 * np.array([3.0, 0.1, 0.4])
    )
    assert np.allclose(M1, M2, atol=1e-12)


def test_rotation_from_to_degenerate_inputs():
    with pytest.raises(DegenerateDirectionError):
        rotation_from_to(np.zeros(3), np.array([1.0, 0, 0]))
    with pytest.raises(DegenerateDirectionError):
        rotation_from_to(np.array([1.0, 0, 0]), np.full(3, 1e-12))


@given(nonzero_vec3, nonzero_vec3)
def test_rotation_from_to_maps_and_is_orthonormal(a, b):
    ah, bh = unit(a), unit(b)
    assume(np.linalg.norm(np.cross(ah, bh)) > 1e-6 or np.dot(ah, bh) > 0.0)
    M = rotation_from_to(a, b)
    assert np.allclose(M @ ah, bh, atol=1e-9)
    assert np.allclose(M.T @ M, np.eye(3), atol=1e-9)
    assert abs(np.linalg.det(M) - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# frame_from_primary_secondary


def test_frame_identity_case():
    M = frame_from_primary_secondary(np.array([0.0, 1, 0]), np.array([0.0, 0, 1]))
    assert np.array_equal(M, np.eye(3))


def test_frame_gram_schmidt_removes_primary_part():
    M = frame_from_primary_secondary(np.array([0.0, 1, 0]), np.array([0.0, 1, 1]))
    assert np.allclose(M[:, 2], np.array([0.0, 0, 1]), atol=1e-12)
    assert np.allclose(M[:, 1], np.array([0.0, 1, 0]), atol=1e-12)


def test_frame_parallel_secondary_rejected():
    with pytest.raises(ParallelAxesError):
        frame_from_primary_secondary(np.array([0.0, 1, 0]), np.array([0.0, 2, 0]))
    with pytest.raises(ParallelAxesError):
        frame_from_primary_secondary(np.array([0.0, 1, 0]), np.array([0.0, -3, 0]))


def test_frame_degenerate_inputs():
    with pytest.raises(DegenerateDirectionError):
        frame_from_primary_secondary(np.zeros(3), np.array([1.0, 0, 0]))
    with pytest.raises(DegenerateDirectionError):
        frame_from_primary_secondary(np.array([0.0, 1, 0]), np.zeros(3))


@given(nonzero_vec3, nonzero_vec3)
def test_frame_properties(primary, secondary):
    y = unit(primary)
    sec = np.asarray(secondary, dtype=float)
    assume(np.linalg.norm(sec - np.dot(sec, y) * y) > 1e-3 * np.linalg.norm(sec))
    M = frame_from_primary_secondary(primary, secondary)
    assert np.allclose(M.T @ M, np.eye(3), atol=1e-9)
    assert abs(np.linalg.det(M) - 1.0) < 1e-9
    assert np.allclose(M[:, 1], y, atol=1e-9)
    # z leans toward the secondary direction, never away
    assert np.dot(M[:, 2], sec) >= 0.0


# ---------------------------------------------------------------------------
# project_on_line


def test_project_on_line_axis_aligned():
    out = project_on_line(np.array([1.0, 2, 0]), np.zeros(3), np.array([0.0, 1, 0]))
    assert np.allclose(out, np.array([0.0, 2, 0]), atol=1e-12)


def test_project_on_line_fixes_points_on_the_line():
    origin = np.array([1.0, -2.0, 0.5])
    d = np.array([2.0, 1.0, -1.0])
    p = origin + 3.25 * d
    assert np.allclose(project_on_line(p, origin, d), p, atol=1e-12)


def test_project_on_line_degenerate_direction():
    with pytest.raises(DegenerateDirectionError):
        project_on_line(np.ones(3), np.zeros(3), np.zeros(3))


@given(vec3, vec3, nonzero_vec3)
def test_project_on_line_idempotent_and_orthogonal(p, origin, d):
    pr = project_on_line(p, origin, d)
    assert np.allclose(project_on_line(pr, origin, d), pr, atol=1e-12)
    assert abs(np.dot(p - pr, unit(d))) < 1e-9 * max(1.0, np.linalg.norm(p - origin))


# ---------------------------------------------------------------------------
# quaternions


def test_quat_rotate_matches_matrix_on_fixed_case():
    q = quat_from_axis_angle(np.array([0.0, 0, 1]), np.pi / 2)
    assert np.allclose(quat_rotate(q, np.array([1.0, 0, 0])), [0.0, 1, 0], atol=1e-12)


@given(unit_quat, vec3)
def test_quat_rotate_matches_matrix(q, v):
    assert np.allclose(quat_rotate(q, v), quat_to_mat3(q) @ v, atol=1e-9)


@given(unit_quat, unit_quat, vec3)
def test_quat_mul_composes_rotations(qa, qb, v):
    lhs = quat_rotate(quat_mul(qa, qb), v)
    rhs = quat_rotate(qa, quat_rotate(qb, v))
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_slerp_midpoint_is_half_angle():
    qa = quat_identity()
    qb = quat_from_axis_angle(np.array([0.0, 0, 1]), np.pi / 2)
    mid = quat_slerp(qa, qb, 0.5)
    assert np.allclose(mid, quat_from_axis_angle(np.array([0.0, 0, 1]), np.pi / 4), atol=1e-12)


def test_slerp_takes_shorter_arc():
    qa = quat_from_axis_angle(np.array([0.0, 0, 1]), 0.3)
    qb = -quat_from_axis_angle(np.array([0.0, 0, 1]), 0.5)
    mid = quat_slerp(qa, qb, 0.5)
    expected = quat_from_axis_angle(np.array([0.0, 0, 1]), 0.4)
    assert min(np.linalg.norm(mid - expected), np.linalg.norm(mid + expected)) < 1e-9


@given(unit_quat, unit_quat, st.floats(0.0, 1.0, allow_nan=False))
def test_slerp_stays_unit(qa, qb, u):
    assert abs(np.linalg.norm(quat_slerp(qa, qb, u)) - 1.0) < 1e-9


def test_rotation_vector_round_trip():
    axis = unit(np.array([1.0, 2.0, -0.5]))
    for theta in (1e-8, 0.3, 1.7, 3.0):
        q = quat_from_axis_angle(axis, theta)
        assert np.allclose(quat_rotation_vector(q), axis * theta, atol=1e-9)


def test_rotation_vector_ignores_quaternion_sign():
    q = quat_from_axis_angle(np.array([0.3, -1.0, 0.2]), 1.1)
    assert np.array_equal(quat_rotation_vector(q), quat_rotation_vector(-q))


def test_rotation_vector_small_angle_branch():
    q = quat_normalize(np.array([1.0, 1e-14, 2e-14, -1e-14]))
    v = quat_rotation_vector(q)
    assert np.allclose(v, [2e-14, 4e-14, -2e-14], rtol=1e-6)


def test_quat_normalize_rejects_zero():
    with pytest.raises(DegenerateDirectionError):
        quat_normalize(np.zeros(4))


# ---------------------------------------------------------------------------
# rigid transforms


def test_rigid_identity_is_noop():
    p = np.array([0.4, -1.0, 2.0])
    assert np.array_equal(RigidTransform.identity().apply(p), p)


@given(unit_quat, vec3, unit_quat, vec3, vec3)
def test_rigid_compose_matches_nested_apply(qa, ta, qb, tb, p):
    A = RigidTransform(qa, ta)
    B = RigidTransform(qb, tb)
    assert np.allclose(A.compose(B).apply(p), A.apply(B.apply(p)), atol=1e-9)


@given(unit_quat, vec3, vec3)
def test_rigid_inverse_round_trips(q, t, p):
    A = RigidTransform(q, t)
    assert np.allclose(A.inverse().apply(A.apply(p)), p, atol=1e-9)


def test_rigid_apply_batch_matches_scalar():
    A = RigidTransform(quat_from_axis_angle(np.array([1.0, 1, 0]), 0.8), np.array([0.1, 0, -2.0]))
    pts = np.array([[0.0, 0, 0], [1.0, 2, 3], [-0.5, 0.25, 4.0]])
    batch = A.apply(pts)
    for k in range(len(pts)):
        assert np.allclose(batch[k], A.apply(pts[k]), atol=1e-12)
