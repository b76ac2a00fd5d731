"""Point clouds and poses."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    labels: np.ndarray | None = None  # True = object, False = background

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=bool).reshape(-1)
            if len(labels) != len(pts):
                raise InvalidInputError("label count must match point count")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.points)

    def object_points(self):
        if self.labels is None:
            return self.points
        return self.points[self.labels]


@dataclass(frozen=True)
class Pose:
    r: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    size: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(3, 3))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).reshape(3))
        size = np.asarray(self.size, dtype=float).reshape(3)
        if np.any(size <= 0):
            raise InvalidInputError("size components must be positive")
        object.__setattr__(self, "size", size)

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.r.T + self.t

    def to_canonical(self, points):
        return (np.asarray(points, dtype=float) - self.t) @ self.r
