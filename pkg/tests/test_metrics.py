import numpy as np
import pytest

from fvrpose import so3
from fvrpose.errors import InvalidInputError
from fvrpose.fvr import SymmetryClass
from fvrpose.metrics import (
    OrientedBox,
    aabb_iou,
    add,
    add_s,
    auc_curve,
    chamfer,
    evaluate_poses,
    iou_3d,
    pose_accept,
    rotation_error_symmetric_aware,
)
from fvrpose.structures import Pose

CUBE = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
RZ90 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])


def rand_pose(rng):
    return Pose(so3.random_rotations(1, rng)[0], rng.standard_normal(3), rng.uniform(0.1, 1, 3))


def test_add_examples(rng):
    p = rand_pose(rng)
    assert add(CUBE, p, p) == 0
    d = np.array([0.3, -0.4, 1.2])
    q = Pose(p.r, p.t + d, p.size)
    assert add(rng.standard_normal((40, 3)), q, p) == pytest.approx(np.linalg.norm(d), abs=1e-12)
    assert add(CUBE, Pose(RZ90), Pose()) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(InvalidInputError):
        add(np.zeros((0, 3)), p, p)


def test_add_left_invariance(rng):
    m = rng.standard_normal((30, 3))
    for _ in range(50):
        a, b = rand_pose(rng), rand_pose(rng)
        Q, s = so3.random_rotations(1, rng)[0], rng.standard_normal(3)
        a2 = Pose(Q @ a.r, Q @ a.t + s, a.size)
        b2 = Pose(Q @ b.r, Q @ b.t + s, b.size)
        assert add(m, a2, b2) == pytest.approx(add(m, a, b), abs=1e-9)


def test_add_s_bounds_add(rng):
    m = rng.standard_normal((60, 3))
    p = rand_pose(rng)
    assert add_s(m, p, p) == 0
    for _ in range(50):
        a, b = rand_pose(rng), rand_pose(rng)
        assert add_s(m, a, b) <= add(m, a, b) + 1e-12


def test_add_s_matches_brute_force(rng):
    m = rng.standard_normal((40, 3))
    a, b = rand_pose(rng), rand_pose(rng)
    pa, pb = a.apply(m), b.apply(m)
    brute = np.mean([min(np.linalg.norm(g - q) for q in pa) for g in pb])
    assert add_s(m, a, b) == pytest.approx(brute, abs=1e-12)


def test_add_s_ring_yaw():
    ang = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    ring = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
    yaw = so3.axis_angle_to_matrix([0, 0, 1], np.deg2rad(3.0))  # 3 steps of the ring
    assert add_s(ring, Pose(yaw), Pose()) < 1e-12
    assert add(ring, Pose(yaw), Pose()) > 0.05


def test_iou_examples():
    a = OrientedBox([0, 0, 0], [0.5, 0.5, 0.5])
    assert iou_3d(a, a) >= 0.995
    assert iou_3d(a, OrientedBox([3, 0, 0], [0.5, 0.5, 0.5])) == 0.0
    b = OrientedBox([0.5, 0, 0], [0.5, 0.5, 0.5])
    assert abs(iou_3d(a, b) - 1 / 3) < 0.01
    assert aabb_iou([-0.5] * 3, [0.5] * 3, [0, -0.5, -0.5], [1, 0.5, 0.5]) == pytest.approx(1 / 3)
    with pytest.raises(InvalidInputError):
        iou_3d(a, b, samples=100)


def test_iou_symmetry_and_rotation(rng):
    for _ in range(10):
        a = OrientedBox(rng.uniform(-0.3, 0.3, 3), rng.uniform(0.2, 1, 3), so3.random_rotations(1, rng)[0])
        b = OrientedBox(rng.uniform(-0.3, 0.3, 3), rng.uniform(0.2, 1, 3), so3.random_rotations(1, rng)[0])
        Q = so3.random_rotations(1, rng)[0]
        ab = iou_3d(a, b, seed=1)
        assert abs(ab - iou_3d(b, a, seed=2)) < 0.02
        qa = OrientedBox(Q @ a.center, a.half_extents, Q @ a.rotation)
        qb = OrientedBox(Q @ b.center, b.half_extents, Q @ b.rotation)
        assert abs(ab - iou_3d(qa, qb, seed=3)) < 0.02


def test_pose_accept():
    assert pose_accept(8, 4, 10, 5)
    assert not pose_accept(8, 6, 10, 5)
    assert not pose_accept(10, 4, 10, 5)
    with pytest.raises(InvalidInputError):
        pose_accept(-1, 0, 10, 5)


def test_symmetric_aware_rotation_error(rng):
    for _ in range(50):
        g = rand_pose(rng)
        yaw = rng.uniform(0, np.pi)
        p = Pose(g.r @ so3.axis_angle_to_matrix([0, 1, 0], yaw), g.t, g.size)
        assert rotation_error_symmetric_aware(p, g, SymmetryClass.AXIS_SYMMETRIC) < 1e-6
        assert rotation_error_symmetric_aware(p, g, "asymmetric") == pytest.approx(np.rad2deg(yaw), abs=1e-6)
        q = rand_pose(rng)
        assert rotation_error_symmetric_aware(q, g, "axis-symmetric") <= rotation_error_symmetric_aware(q, g) + 1e-9


def test_chamfer(rng):
    x = rng.standard_normal((30, 3))
    assert chamfer(x, x) == 0
    assert chamfer([[0, 0, 0]], [[1, 0, 0]]) == 2
    a, b = rng.standard_normal((25, 3)), rng.standard_normal((40, 3))
    d = np.sum((a[:, None] - b[None]) ** 2, axis=2)
    assert chamfer(a, b) == pytest.approx(d.min(axis=1).sum() + d.min(axis=0).sum(), rel=1e-12)
    assert chamfer(a, b) == chamfer(b, a)


def test_auc_examples():
    curve, auc = auc_curve([0, 0, 0], 4.0, 101)
    assert auc == pytest.approx(1 - 0.5 / 100)
    assert auc_curve([5, 6], 4.0, 50)[1] == 0
    # thresholds 0..4 step 1: acc = 0, 0, .5, .5, 1 -> trapezoid 1.5 / 4
    curve, auc = auc_curve([1, 3], 4.0, 5)
    np.testing.assert_array_equal(curve[:, 1], [0, 0, 0.5, 0.5, 1])
    assert auc == pytest.approx(0.375)
    assert auc_curve([1, 3], 4.0, 4001)[1] == pytest.approx(0.5, abs=1e-3)


def test_auc_monotone(rng):
    for _ in range(50):
        e = rng.uniform(0, 10, 30)
        smaller = e * rng.uniform(0, 1, 30)
        assert auc_curve(smaller, 8.0, 40)[1] >= auc_curve(e, 8.0, 40)[1]


def test_evaluate_poses_report(rng):
    gts = [rand_pose(rng) for _ in range(5)]
    preds = [Pose(g.r, g.t + [0.01, 0, 0], g.size) for g in gts]
    rep = evaluate_poses(preds, gts, rng.standard_normal((20, 3)), iou_samples=20_000)
    assert len(rep.records) == 5
    assert rep.aggregates["5deg_5cm"] == 1.0
    assert rep.aggregates["IoU_50"] == 1.0
    for v in rep.aggregates.values():
        assert 0 <= v <= 5
