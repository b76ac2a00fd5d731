"""Pose evaluation metrics: ADD/ADD-S, 3D IoU, n-degree m-cm acceptance, Chamfer, AUC."""

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .errors import InvalidInputError
from .fvr import SymmetryClass, rotation_from_green_only
from .structures import Pose

IOU_THRESHOLDS = (0.25, 0.50, 0.75, 0.90)
POSE_THRESHOLDS = ((5.0, 5.0), (10.0, 5.0), (10.0, 10.0))  # (degrees, cm)


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        he = np.asarray(self.half_extents, dtype=float).reshape(3)
        if np.any(he <= 0):
            raise InvalidInputError("box half extents must be positive")
        object.__setattr__(self, "half_extents", he)
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))

    @classmethod
    def from_pose(cls, pose):
        return cls(pose.t, pose.size / 2.0, pose.r)

    def corners(self):
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        return (signs * self.half_extents) @ self.rotation.T + self.center

    def contains(self, points):
        local = (np.asarray(points, dtype=float) - self.center) @ self.rotation
        return np.all(np.abs(local) <= self.half_extents, axis=-1)

    @property
    def volume(self):
        return float(np.prod(2.0 * self.half_extents))


def _model(m):
    m = np.asarray(m, dtype=float).reshape(-1, 3)
    if len(m) == 0:
        raise InvalidInputError("model must contain at least one point")
    return m


def add(model, pose_pred, pose_gt):
    """Average distance between corresponding model points (meters)."""
    m = _model(model)
    return float(np.mean(np.linalg.norm(pose_pred.apply(m) - pose_gt.apply(m), axis=1)))


def _nearest_sq(a, b, chunk=2048):
    """Squared distance from each row of ``a`` to its nearest row of ``b``."""
    out = np.empty(len(a))
    bb = np.sum(b * b, axis=1)
    for i in range(0, len(a), chunk):
        blk = a[i: i + chunk]
        d = np.sum(blk * blk, axis=1)[:, None] - 2.0 * blk @ b.T + bb[None, :]
        j = np.argmin(d, axis=1)
        # recompute exactly for the winners; the expansion above can go slightly negative
        out[i: i + chunk] = np.sum((blk - b[j]) ** 2, axis=1)
    return out


def add_s(model, pose_pred, pose_gt):
    """ADD for symmetric objects: each gt point is matched to its closest predicted point."""
    m = _model(model)
    gt = pose_gt.apply(m)
    pred = pose_pred.apply(m)
    return float(np.mean(np.sqrt(_nearest_sq(gt, pred))))


def iou_3d(a, b, samples=200_000, seed=0):
    """Monte Carlo IoU of two oriented boxes.

    Points are drawn uniformly in the axis-aligned bound of both boxes and tested
    against each box exactly; disjoint boxes therefore score exactly 0.
    """
    if samples < 10_000:
        raise InvalidInputError("iou_3d needs at least 10,000 samples")
    corners = np.vstack([a.corners(), b.corners()])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    rng = np.random.default_rng(seed)
    pts = lo + rng.random((samples, 3)) * (hi - lo)
    ina = a.contains(pts)
    inb = b.contains(pts)
    union = np.count_nonzero(ina | inb)
    if union == 0:
        return 0.0
    return np.count_nonzero(ina & inb) / union


def aabb_iou(a_min, a_max, b_min, b_max):
    """Exact IoU of two axis-aligned boxes given by their min/max corners."""
    a_min, a_max, b_min, b_max = (np.asarray(x, dtype=float) for x in (a_min, a_max, b_min, b_max))
    inter = np.prod(np.clip(np.minimum(a_max, b_max) - np.maximum(a_min, b_min), 0.0, None))
    union = np.prod(a_max - a_min) + np.prod(b_max - b_min) - inter
    return float(inter / union)


def pose_accept(rot_err, trans_err, n, m):
    """True iff rotation error < n degrees and translation error < m cm."""
    if rot_err < 0 or trans_err < 0:
        raise InvalidInputError("errors must be non-negative")
    return bool(rot_err < n and trans_err < m)


def rotation_error_symmetric_aware(pose_pred, pose_gt, sym=SymmetryClass.ASYMMETRIC):
    """Rotation error in degrees; axis-symmetric objects only compare the up (y) axes."""
    if SymmetryClass(sym) is SymmetryClass.AXIS_SYMMETRIC:
        return float(np.rad2deg(rotation_from_green_only(pose_pred.r[:, 1], pose_gt.r[:, 1])))
    return float(np.rad2deg(so3.geodesic_error(pose_pred.r, pose_gt.r)))


def translation_error_cm(pose_pred, pose_gt):
    return float(100.0 * np.linalg.norm(pose_pred.t - pose_gt.t))


def chamfer(a, b):
    """Sum of squared nearest-neighbour distances in both directions."""
    a = _model(getattr(a, "points", a))
    b = _model(getattr(b, "points", b))
    return float(np.sum(_nearest_sq(a, b)) + np.sum(_nearest_sq(b, a)))


def auc_curve(errors, max_threshold, steps=100):
    """Accuracy-vs-threshold curve and its normalized area.

    Thresholds are ``steps`` evenly spaced values on ``[0, max_threshold]``;
    accuracy uses strict ``error < threshold``, so accuracy at 0 is always 0 and a
    perfect predictor scores ``1 - 0.5 / (steps - 1)`` rather than exactly 1.
    """
    errors = np.asarray(errors, dtype=float).ravel()
    if max_threshold <= 0:
        raise InvalidInputError("max_threshold must be positive")
    if np.any(errors < 0):
        raise InvalidInputError("errors must be non-negative")
    if steps < 2:
        raise InvalidInputError("need at least two threshold steps")
    thresholds = np.linspace(0.0, max_threshold, steps)
    if errors.size == 0:
        acc = np.zeros(steps)
    else:
        srt = np.sort(errors)
        acc = np.searchsorted(srt, thresholds, side="left") / errors.size
    area = np.sum((acc[1:] + acc[:-1]) * np.diff(thresholds)) / 2.0
    return np.stack([thresholds, acc], axis=1), float(area / max_threshold)


@dataclass
class MetricReport:
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)


def evaluate_poses(
    preds,
    gts,
    model,
    sym=SymmetryClass.ASYMMETRIC,
    iou_thresholds=IOU_THRESHOLDS,
    pose_thresholds=POSE_THRESHOLDS,
    iou_samples=200_000,
    seed=0,
    auc_max_rot=180.0,
    auc_max_add=0.1,
    auc_steps=100,
):
    """Per-sample metrics plus threshold accuracies and AUCs."""
    if len(preds) != len(gts):
        raise InvalidInputError("prediction and ground-truth counts differ")
    sym = SymmetryClass(sym)
    records = []
    for i, (p, g) in enumerate(zip(preds, gts)):
        rec = {
            "index": i,
            "add": add(model, p, g),
            "add_s": add_s(model, p, g),
            "iou": iou_3d(OrientedBox.from_pose(p), OrientedBox.from_pose(g), iou_samples, seed + i),
            "rot_err_deg": rotation_error_symmetric_aware(p, g, sym),
            "trans_err_cm": translation_error_cm(p, g),
        }
        records.append(rec)
    return MetricReport(records, aggregate(records, sym, iou_thresholds, pose_thresholds,
                                           auc_max_rot, auc_max_add, auc_steps))


def aggregate(records, sym, iou_thresholds=IOU_THRESHOLDS, pose_thresholds=POSE_THRESHOLDS,
              auc_max_rot=180.0, auc_max_add=0.1, auc_steps=100):
    n = max(len(records), 1)
    out = {"count": len(records)}
    for t in iou_thresholds:
        out[f"IoU_{round(100 * t)}"] = sum(r["iou"] > t for r in records) / n
    for deg, cm in pose_thresholds:
        key = f"{deg:g}deg_{cm:g}cm"
        out[key] = sum(pose_accept(r["rot_err_deg"], r["trans_err_cm"], deg, cm) for r in records) / n
    adds = [r["add_s"] if SymmetryClass(sym) is SymmetryClass.AXIS_SYMMETRIC else r["add"] for r in records]
    out["AUC_rot"] = auc_curve([r["rot_err_deg"] for r in records], auc_max_rot, auc_steps)[1]
    out["AUC_add"] = auc_curve(adds, auc_max_add, auc_steps)[1]
    return out
