"""Translation/size residual targets and the Umeyama similarity solver."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidPredictionError, RankDeficientError
from .structures import Pose


@dataclass(frozen=True)
class CategoryStats:
    mean_size: np.ndarray

    def __post_init__(self):
        ms = np.asarray(self.mean_size, dtype=float).reshape(3)
        if np.any(ms <= 0):
            raise InvalidInputError("mean size must be positive")
        object.__setattr__(self, "mean_size", ms)


@dataclass(frozen=True)
class ResidualTargets:
    translation_residual: np.ndarray
    size_residual: np.ndarray


def _cloud_mean(cloud):
    pts = cloud.object_points()
    if len(pts) == 0:
        raise InvalidInputError("cloud has no object points")
    return pts.mean(axis=0)


def residual_targets(cloud, pose_gt, stats):
    """Residuals of the ground-truth translation and size w.r.t. cloud mean and category mean size."""
    return ResidualTargets(pose_gt.t - _cloud_mean(cloud), pose_gt.size - stats.mean_size)


def assemble_pose(cloud, pred, pred_rotation, stats):
    size = stats.mean_size + np.asarray(pred.size_residual, dtype=float)
    if np.any(size <= 0):
        raise InvalidPredictionError(f"assembled size is not positive: {size}")
    t = _cloud_mean(cloud) + np.asarray(pred.translation_residual, dtype=float)
    return Pose(pred_rotation, t, size)


def umeyama(src, dst, with_scale=True):
    """Least-squares similarity ``dst ~ s R src + t``.

    Returns ``(s, R, t)``. Reflections are removed by flipping the weakest
    singular direction.
    """
    src = np.asarray(getattr(src, "points", src), dtype=float).reshape(-1, 3)
    dst = np.asarray(getattr(dst, "points", dst), dtype=float).reshape(-1, 3)
    if len(src) != len(dst):
        raise InvalidInputError("point counts differ")
    if len(src) < 3:
        raise RankDeficientError("need at least three correspondences")
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    xs, xd = src - mu_s, dst - mu_d
    sv = np.linalg.svd(xs, compute_uv=False)
    if sv[1] <= 1e-10 * max(sv[0], 1e-300):
        raise RankDeficientError("source points are collinear or coincident")
    cov = xd.T @ xs / len(src)
    U, D, Vt = np.linalg.svd(cov)
    S = np.ones(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2] = -1.0
    R = (U * S) @ Vt
    if with_scale:
        var_s = np.mean(np.sum(xs * xs, axis=1))
        s = float(np.sum(D * S) / var_s)
    else:
        s = 1.0
    t = mu_d - s * R @ mu_s
    return s, R, t
