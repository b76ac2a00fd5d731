"""Regression targets for each rotation representation and their decoupled sub-terms."""

from dataclasses import dataclass, field

import numpy as np

from .. import so3
from ..errors import InvalidInputError
from ..fvr import FvrEncoding, FvrParams, fvr_decode, fvr_encode

REPRESENTATIONS = ("matrix", "euler", "quaternion", "axis_angle", "r6d", "fvr")
MODES = ("whole", "decoupled")


@dataclass(frozen=True)
class HeadConfig:
    mode: str = "whole"
    representation: str = "fvr"
    fvr_params: FvrParams = field(default_factory=FvrParams)
    symmetric: bool = False  # score only the green (up) axis

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.representation not in REPRESENTATIONS:
            raise InvalidInputError(f"unknown representation {self.representation!r}")

    @property
    def codec(self):
        return make_codec(self.representation, self.fvr_params)

    def head_slices(self):
        c = self.codec
        if self.mode == "whole":
            return [slice(0, c.dim)]
        return list(c.subterms)


class Codec:
    name = ""
    dim = 0
    subterms = ()

    def encode(self, R):
        raise NotImplementedError

    def decode(self, y):
        raise NotImplementedError


class MatrixCodec(Codec):
    name, dim = "matrix", 9
    subterms = (slice(0, 3), slice(3, 6), slice(6, 9))  # columns

    def encode(self, R):
        return np.swapaxes(R, -1, -2).reshape(len(R), 9)

    def decode(self, y):
        return so3.project_to_so3(np.swapaxes(y.reshape(-1, 3, 3), -1, -2))


class EulerCodec(Codec):
    name, dim = "euler", 3
    subterms = (slice(0, 1), slice(1, 2), slice(2, 3))

    def encode(self, R):
        return so3.matrix_to_euler(R)

    def decode(self, y):
        return so3.euler_to_matrix(y)


class QuaternionCodec(Codec):
    name, dim = "quaternion", 4
    subterms = (slice(0, 1), slice(1, 2), slice(2, 3), slice(3, 4))

    def encode(self, R):
        return so3.matrix_to_quat(R)

    def decode(self, y):
        # sub-term heads are concatenated and renormalized jointly
        n = np.linalg.norm(y, axis=1, keepdims=True)
        q = np.where(n > 0, y / np.where(n > 0, n, 1.0), np.array([1.0, 0, 0, 0]))
        return so3.quat_to_matrix(q)


class AxisAngleCodec(Codec):
    """Unit axis (3) plus angle (1)."""

    name, dim = "axis_angle", 4
    subterms = (slice(0, 3), slice(3, 4))

    def encode(self, R):
        axis, angle = so3.matrix_to_axis_angle(R)
        return np.concatenate([axis, np.reshape(angle, (-1, 1))], axis=1)

    def decode(self, y):
        axis = y[:, :3]
        n = np.linalg.norm(axis, axis=1, keepdims=True)
        axis = np.where(n > 0, axis / np.where(n > 0, n, 1.0), so3.DEFAULT_AXIS)
        return so3.axis_angle_to_matrix(axis, y[:, 3])


class R6dCodec(Codec):
    name, dim = "r6d", 6
    subterms = (slice(0, 3), slice(3, 6))

    def encode(self, R):
        return so3.matrix_to_r6d(R)

    def decode(self, y):
        return so3.r6d_to_matrix(y)


class FvrCodec(Codec):
    """Start and end points of both vectors; one head per vector when decoupled."""

    name, dim = "fvr", 12
    subterms = (slice(0, 6), slice(6, 12))

    def __init__(self, params):
        self.params = params

    def encode(self, R):
        return fvr_encode(R, self.params).flat()

    def decode(self, y):
        return fvr_decode(FvrEncoding.from_flat(y), self.params)


def make_codec(name, fvr_params=None):
    if name == "fvr":
        return FvrCodec(fvr_params or FvrParams())
    table = {c.name: c for c in (MatrixCodec, EulerCodec, QuaternionCodec, AxisAngleCodec, R6dCodec)}
    if name not in table:
        raise InvalidInputError(f"unknown representation {name!r}")
    return table[name]()
