import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvrpose import so3
from fvrpose.errors import DegenerateInputError, InvalidInputError
from fvrpose.fvr import FvrEncoding, FvrParams, fvr_decode, fvr_encode, rotation_from_green_only
from fvrpose.regressor import ANGLES_DEG, L_VALUES


def test_r6d_special_case_identity():
    e = fvr_encode(np.eye(3), FvrParams(0, 0, 1, 1))
    np.testing.assert_array_equal(e.green_end, [0, 1, 0])
    np.testing.assert_array_equal(e.red_end, [1, 0, 0])
    np.testing.assert_array_equal(e.green_start, 0)
    np.testing.assert_array_equal(e.red_start, 0)


def test_pure_scaling():
    e = fvr_encode(np.eye(3), FvrParams(0, 0, 100, 100))
    np.testing.assert_array_equal(e.green_end, [0, 100, 0])
    np.testing.assert_array_equal(e.red_end, [100, 0, 0])


def test_theta_g_quarter_turn():
    # red (1,0,0) rotated about the y axis by pi/2 -> (0,0,-1)
    e = fvr_encode(np.eye(3), FvrParams(np.pi / 2, 0, 1, 1))
    np.testing.assert_allclose(e.green_end, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(e.red_end, [0, 0, -1], atol=1e-15)


def test_theta_r_rotates_green_about_red():
    e = fvr_encode(np.eye(3), FvrParams(0, np.pi / 2, 1, 1))
    np.testing.assert_allclose(e.green_end, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(e.red_end, [1, 0, 0], atol=1e-15)


def test_params_validation_and_wrapping():
    with pytest.raises(InvalidInputError):
        FvrParams(0, 0, 0.0, 1)
    p = FvrParams(-np.pi / 2, 5 * np.pi, 2, 3)
    assert p.theta_g == pytest.approx(1.5 * np.pi)
    assert p.theta_r == pytest.approx(np.pi)


def test_encoded_vectors_orthogonal_for_every_grid_angle():
    R = so3.random_rotations(50, 1)
    for tg, tr in itertools.product(ANGLES_DEG, ANGLES_DEG):
        e = fvr_encode(R, FvrParams.from_degrees(tg, tr, 1.0))
        assert np.max(np.abs(np.sum(e.green * e.red, axis=1))) < 1e-12


def test_green_stays_orthogonal_to_red_base_when_theta_g_zero(rng):
    R = so3.random_rotations(200, rng)
    for tr in ANGLES_DEG:
        e = fvr_encode(R, FvrParams.from_degrees(0, tr, 7.0))
        assert np.max(np.abs(np.sum(e.green_end * R[:, :, 0], axis=1))) < 1e-9


def test_r6d_equivalence_on_random_rotations(rng):
    R = so3.random_rotations(1000, rng)
    e = fvr_encode(R, FvrParams(0, 0, 1, 1))
    np.testing.assert_allclose(e.green_end, R[:, :, 1], atol=1e-12)
    np.testing.assert_allclose(e.red_end, R[:, :, 0], atol=1e-12)


def test_decode_round_trip_identity_full_grid():
    for l, tg, tr in itertools.product(L_VALUES, ANGLES_DEG, ANGLES_DEG):
        p = FvrParams.from_degrees(tg, tr, l)
        assert so3.geodesic_error(fvr_decode(fvr_encode(np.eye(3), p), p), np.eye(3)) < 1e-8


def test_decode_noisy_matches_r6d():
    red, green = np.array([1.1, 0.05, 0]), np.array([-0.04, 0.98, 0])
    e = FvrEncoding(np.zeros(3), green, np.zeros(3), red)
    expected = so3.r6d_to_matrix(np.concatenate([red, green]))
    assert so3.geodesic_error(fvr_decode(e, FvrParams()), expected) < 1e-12


def test_decode_uses_vector_fashion():
    s = np.full(3, 0.1)
    e = FvrEncoding(s, [0.1, 1.1, 0.1], s, [1.1, 0.1, 0.1])
    np.testing.assert_allclose(fvr_decode(e, FvrParams()), np.eye(3), atol=1e-15)


def test_decode_translation_invariant(rng):
    p = FvrParams.from_degrees(60, 150, 10)
    flat = fvr_encode(so3.random_rotations(100, rng), p).flat() + 0.5 * rng.standard_normal((100, 12))
    base = fvr_decode(FvrEncoding.from_flat(flat), p)
    shift = np.tile(rng.uniform(-50, 50, 3), 4)
    moved = fvr_decode(FvrEncoding.from_flat(flat + shift), p)
    assert np.max(so3.geodesic_error(base, moved)) < 1e-12
    assert all(so3.is_rotation(r) for r in moved)


def test_decode_degenerate_raises():
    with pytest.raises(DegenerateInputError):
        fvr_decode(FvrEncoding(np.zeros(3), [0, 1, 0], np.zeros(3), [0, 2, 0]), FvrParams())
    with pytest.raises(DegenerateInputError):
        fvr_decode(FvrEncoding(np.ones(3), np.ones(3), np.zeros(3), [1, 0, 0]), FvrParams())


def test_flat_layout_round_trip(rng):
    x = rng.standard_normal(12)
    np.testing.assert_array_equal(FvrEncoding.from_flat(x).flat(), x)


def test_green_only_examples():
    assert rotation_from_green_only([0, 1, 0], [0, 1, 0]) == 0.0
    assert rotation_from_green_only([0, 1, 0], [1, 0, 0]) == pytest.approx(np.pi / 2)
    with pytest.raises(InvalidInputError):
        rotation_from_green_only([0, 0, 0], [1, 0, 0])


@settings(max_examples=200, deadline=None)
@given(
    v=st.lists(st.floats(-100, 100), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
    k=st.floats(1e-3, 1e3),
)
def test_green_only_scale_invariant(v, k):
    v = np.array(v)
    assert rotation_from_green_only(k * v, v) < 1e-7
