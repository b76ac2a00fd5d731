"""Flexible vector-based rotation (FVR).

A rotation is described by two vectors attached to the object: the green vector
(object "up", ``R @ e_y``) and the red vector (``R @ e_x``). Four free parameters
reshape them:

* ``theta_r`` rotates the green vector about the red base axis,
* ``theta_g`` then rotates the red vector about the (already rotated) green vector,
* ``l_g`` / ``l_r`` scale the green / red vectors.

Because each angle is applied about a vector the other one is orthogonal to, the
two encoded vectors stay orthogonal for every parameter choice. With
``FvrParams(0, 0, 1, 1)`` the encoding is exactly the r6d pair of columns.

Predictions are start/end point pairs; decoding only ever uses ``end - start``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import so3
from .errors import DegenerateInputError, InvalidInputError

TWO_PI = 2.0 * np.pi


class SymmetryClass(str, Enum):
    ASYMMETRIC = "asymmetric"
    AXIS_SYMMETRIC = "axis-symmetric"


@dataclass(frozen=True)
class FvrParams:
    theta_g: float = 0.0
    theta_r: float = 0.0
    l_g: float = 1.0
    l_r: float = 1.0

    def __post_init__(self):
        if not (self.l_g > 0 and self.l_r > 0):
            raise InvalidInputError("FVR lengths must be positive")
        object.__setattr__(self, "theta_g", float(self.theta_g) % TWO_PI)
        object.__setattr__(self, "theta_r", float(self.theta_r) % TWO_PI)
        object.__setattr__(self, "l_g", float(self.l_g))
        object.__setattr__(self, "l_r", float(self.l_r))

    @classmethod
    def from_degrees(cls, theta_g_deg, theta_r_deg, length, l_r=None):
        return cls(np.deg2rad(theta_g_deg), np.deg2rad(theta_r_deg), length, length if l_r is None else l_r)

    def body_vectors(self):
        """Unit green and red directions expressed in the object frame."""
        cr, sr = np.cos(self.theta_r), np.sin(self.theta_r)
        cg, sg = np.cos(self.theta_g), np.sin(self.theta_g)
        green = np.array([0.0, cr, sr])
        red = np.array([cg, sg * sr, -sg * cr])
        return green, red

    def body_frame(self):
        """Rotation taking the base frame onto ``[red | green | red x green]``."""
        green, red = self.body_vectors()
        return np.stack([red, green, np.cross(red, green)], axis=-1)


@dataclass(frozen=True)
class FvrEncoding:
    green_start: np.ndarray
    green_end: np.ndarray
    red_start: np.ndarray
    red_end: np.ndarray

    def __post_init__(self):
        for name in ("green_start", "green_end", "red_start", "red_end"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def green(self):
        return self.green_end - self.green_start

    @property
    def red(self):
        return self.red_end - self.red_start

    def flat(self):
        """12 values ordered green_start, green_end, red_start, red_end."""
        return np.concatenate(
            [self.green_start, self.green_end, self.red_start, self.red_end], axis=-1
        )

    @classmethod
    def from_flat(cls, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 12:
            raise InvalidInputError("flat FVR encoding needs 12 values")
        return cls(x[..., 0:3], x[..., 3:6], x[..., 6:9], x[..., 9:12])


def fvr_encode(R, p):
    """Encode rotation(s) ``R`` as FVR vectors with both start points at the origin."""
    R = np.asarray(R, dtype=float)
    g0 = R[..., :, 1]
    r0 = R[..., :, 0]
    green = so3.rotate_about_axis(g0, r0, p.theta_r)
    red = so3.rotate_about_axis(r0, green, p.theta_g)
    zero = np.zeros_like(green)
    return FvrEncoding(zero, p.l_g * green, zero.copy(), p.l_r * red)


def fvr_decode(e, p):
    """Rotation matrix from (possibly noisy) FVR vectors.

    The observed red/green directions are orthonormalized by Gram-Schmidt with
    red kept fixed, then the parameter-dependent body frame is undone. At
    ``theta_g = theta_r = 0`` this is exactly the r6d decode.
    """
    frame = so3.gram_schmidt(np.atleast_2d(e.red), np.atleast_2d(e.green))
    R = frame @ p.body_frame().T
    return R[0] if np.ndim(e.red) == 1 else R


def rotation_from_green_only(green, reference_green):
    """Angle (radians) between two green vectors; the symmetric-object rotation error."""
    a = np.asarray(green, dtype=float)
    b = np.asarray(reference_green, dtype=float)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na == 0) or np.any(nb == 0):
        raise InvalidInputError("green vectors must be nonzero")
    # atan2 form stays accurate for nearly parallel vectors
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    ang = np.arctan2(cross, dot)
    return float(ang) if np.ndim(ang) == 0 else ang
