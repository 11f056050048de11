"""Kernel math against scipy oracles, and compiled/pure agreement."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

import scenetalk.kernels as K
from scenetalk.kernels import _transform_py

try:
    from scenetalk.kernels import _transform_cy
    BACKENDS = [_transform_py, _transform_cy]
except ImportError:  # extension not built in this environment
    _transform_cy = None
    BACKENDS = [_transform_py]

angles = st.floats(-720, 720, allow_nan=False)
coords = st.floats(-100, 100, allow_nan=False)
scales = st.floats(0.2, 5.0, allow_nan=False)


def euler_triplets():
    return st.tuples(angles, angles, angles)


@given(euler_triplets())
def test_euler_matrix_matches_scipy(e):
    mine = np.array(K.euler_to_mat3(*e)).reshape(3, 3)
    ref = Rotation.from_euler("YXZ", e, degrees=True).as_matrix()
    assert np.abs(mine - ref).max() < 1e-12


@given(euler_triplets())
def test_euler_roundtrip_reproduces_matrix(e):
    m = K.euler_to_mat3(*e)
    back = K.euler_to_mat3(*K.mat3_to_euler(m))
    assert max(abs(a - b) for a, b in zip(m, back)) < 1e-9


@pytest.mark.parametrize("pitch", [90.0, -90.0])
def test_euler_gimbal_lock_roundtrip(pitch):
    m = K.euler_to_mat3(35.0, pitch, -20.0)
    back = K.euler_to_mat3(*K.mat3_to_euler(m))
    assert max(abs(a - b) for a, b in zip(m, back)) < 1e-9


@given(euler_triplets(), st.tuples(coords, coords, coords))
def test_mat3_apply_matches_numpy(e, v):
    m = K.euler_to_mat3(*e)
    mine = K.mat3_apply(m, v)
    ref = np.array(m).reshape(3, 3) @ np.array(v)
    assert np.abs(np.array(mine) - ref).max() < 1e-9


@given(
    st.tuples(coords, coords, coords), euler_triplets(),
    st.tuples(scales, scales, scales),
    st.tuples(coords, coords, coords),
)
def test_affine_invert_is_inverse(pos, e, scale, point):
    m, t = K.trs_to_affine(pos, e, scale)
    mi, ti = K.affine_invert(m, t)
    roundtrip = K.affine_apply(mi, ti, K.affine_apply(m, t, point))
    assert max(abs(a - b) for a, b in zip(roundtrip, point)) < 1e-6


@given(euler_triplets())
def test_axis_angle_roundtrip(e):
    m = K.euler_to_mat3(*e)
    axis, deg = K.mat3_to_axis_angle(m)
    back = K.axis_angle_to_mat3(axis, deg)
    assert max(abs(a - b) for a, b in zip(m, back)) < 1e-8


def test_axis_angle_against_scipy():
    m = tuple(Rotation.from_rotvec([0.3, -1.1, 0.7]).as_matrix().flatten())
    axis, deg = K.mat3_to_axis_angle(m)
    rotvec = np.array(axis) * math.radians(deg)
    assert np.allclose(rotvec, [0.3, -1.1, 0.7], atol=1e-9)


def test_aim_euler_points_forward():
    for d in [(1, 0, 0), (0, 0, -1), (0.3, 0.8, 0.2), (0, 1, 0)]:
        e = K.aim_euler(d)
        fwd = K.mat3_apply(K.euler_to_mat3(*e), (0, 0, 1))
        want = np.array(d) / np.linalg.norm(d)
        assert np.abs(np.array(fwd) - want).max() < 1e-9


def test_rotate_about_pivot_preserves_distance():
    p = K.rotate_about_pivot((2.0, 0.5, 0.0), (0.0, 0.5, 0.0), (0, 1, 0), 47.0)
    assert abs(K.v_dist(p, (0.0, 0.5, 0.0)) - 2.0) < 1e-12


def test_norm_angle_range():
    for a in (-180.0, 180.0, 540.0, -540.0, 0.0, 179.999999, 1e9):
        n = K.norm_angle_deg(a)
        assert -180.0 <= n < 180.0


@pytest.mark.skipif(_transform_cy is None, reason="extension not built")
@given(
    st.tuples(coords, coords, coords), euler_triplets(),
    st.tuples(scales, scales, scales),
    st.tuples(coords, coords, coords),
)
@settings(max_examples=200)
def test_backends_agree(pos, e, scale, point):
    assert _transform_py.euler_to_mat3(*e) == pytest.approx(
        _transform_cy.euler_to_mat3(*e), abs=1e-15)
    mp, tp = _transform_py.trs_to_affine(pos, e, scale)
    mc, tc = _transform_cy.trs_to_affine(pos, e, scale)
    assert mp == pytest.approx(mc, abs=1e-15)
    assert tp == pytest.approx(tc, abs=1e-15)
    assert _transform_py.affine_apply(mp, tp, point) == pytest.approx(
        _transform_cy.affine_apply(mc, tc, point), abs=1e-12)
    rot = _transform_py.euler_to_mat3(*e)
    assert _transform_py.mat3_to_euler(rot) == pytest.approx(
        _transform_cy.mat3_to_euler(rot), abs=1e-12)


def test_backend_selected():
    assert K.BACKEND in ("compiled", "pure-python")
