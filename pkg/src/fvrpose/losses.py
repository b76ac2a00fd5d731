"""Rotation losses with analytic gradients."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class LossValue:
    value: float
    gradient: np.ndarray


def _pair(pred, target):
    pred = np.asarray(pred, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if pred.shape != target.shape:
        raise InvalidInputError(f"length mismatch: {pred.size} vs {target.size}")
    if pred.size == 0:
        raise InvalidInputError("empty input")
    return pred, target


def _model(points):
    m = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(m) == 0:
        raise InvalidInputError("model must contain at least one point")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("model coordinates must be finite")
    return m


def mse_loss(pred, target):
    pred, target = _pair(pred, target)
    d = pred - target
    return LossValue(float(np.mean(d * d)), 2.0 * d / d.size)


def smooth_l1_loss(pred, target, beta=1.0):
    pred, target = _pair(pred, target)
    d = pred - target
    ad = np.abs(d)
    quad = ad < beta
    value = np.where(quad, 0.5 * d * d / beta, ad - 0.5 * beta)
    grad = np.where(quad, d / beta, np.sign(d))
    return LossValue(float(np.mean(value)), grad / d.size)


def point_matching_loss(R_pred, R_gt, model, squared=False):
    """Mean distance between model points under the two rotations.

    The gradient is taken w.r.t. the nine entries of ``R_pred`` (row-major).
    ``squared=True`` averages squared distances instead, which is smooth at zero.
    """
    m = _model(model)
    Rp = np.asarray(R_pred, dtype=float).reshape(3, 3)
    Rg = np.asarray(R_gt, dtype=float).reshape(3, 3)
    u = m @ (Rp - Rg).T
    if squared:
        value = np.mean(np.sum(u * u, axis=1))
        grad = 2.0 * u.T @ m / len(m)
        return LossValue(float(value), grad.ravel())
    dist = np.linalg.norm(u, axis=1)
    safe = np.where(dist > 0, dist, 1.0)
    unit = np.where(dist[:, None] > 0, u / safe[:, None], 0.0)
    grad = unit.T @ m / len(m)
    return LossValue(float(np.mean(dist)), grad.ravel())


def chord_distance(r, theta):
    """Displacement of a point at radius ``r`` rotated by ``theta``: ``2 r sin(theta / 2)``."""
    return 2.0 * np.asarray(r, dtype=float) * np.sin(np.asarray(theta, dtype=float) / 2.0)


def fvr_point_matching_loss(pred, target, model, squared=False):
    """Point-matching loss on FVR vectors, translating model points along each vector.

    The model cancels, so the value reduces to the sum of the green and red vector
    errors. It is nevertheless evaluated on the translated points. The gradient
    is w.r.t. the 12 predicted values (green start/end, red start/end).
    """
    m = _model(model)
    total = 0.0
    grad = np.zeros(12)
    for k, (pv, tv) in enumerate(((pred.green, target.green), (pred.red, target.red))):
        pv = np.asarray(pv, dtype=float)
        tv = np.asarray(tv, dtype=float)
        diff = (m + tv) - (m + pv)
        dist = np.linalg.norm(diff, axis=1)
        if squared:
            total += float(np.mean(dist * dist))
            dv = 2.0 * (pv - tv)
        else:
            total += float(np.mean(dist))
            n = np.linalg.norm(pv - tv)
            dv = (pv - tv) / n if n > 0 else np.zeros(3)
        # d/d end = dv, d/d start = -dv
        grad[6 * k: 6 * k + 3] = -dv
        grad[6 * k + 3: 6 * k + 6] = dv
    return LossValue(total, grad)
