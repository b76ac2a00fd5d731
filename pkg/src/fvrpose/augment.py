"""Box-cage 3D deformation, depth back-projection and fast point-wise relabelling."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .structures import PointCloud

BOX_TOL = 1.5


@dataclass(frozen=True)
class DeformCage:
    """Canonical bounding box plus the deformation applied to it.

    ``face_offsets[a] = (neg, pos)`` moves the -a / +a face outward by that many
    meters. ``taper[a] = (neg, pos)`` are in-plane scale factors at the -a / +a
    faces, interpolated linearly along axis ``a``.
    """

    half_extents: np.ndarray
    face_offsets: np.ndarray = field(default_factory=lambda: np.zeros((3, 2)))
    taper: np.ndarray = field(default_factory=lambda: np.ones((3, 2)))

    def __post_init__(self):
        h = np.asarray(self.half_extents, dtype=float).reshape(3)
        off = np.asarray(self.face_offsets, dtype=float).reshape(3, 2)
        tap = np.asarray(self.taper, dtype=float).reshape(3, 2)
        if np.any(h <= 0):
            raise InvalidInputError("half extents must be positive")
        if np.any(2 * h + off.sum(axis=1) <= 0):
            raise InvalidInputError("face offsets fold the cage over")
        if np.any(tap <= 0):
            raise InvalidInputError("taper factors must be positive")
        slope = np.abs(tap[:, 1] - tap[:, 0]) / (2 * tap.min(axis=1))
        reach = h + off.max(axis=1)
        if np.any(h + off.sum(axis=1) / 2 <= reach * (slope.sum() - slope)):
            raise InvalidInputError("taper factors fold the cage over")
        object.__setattr__(self, "half_extents", h)
        object.__setattr__(self, "face_offsets", off)
        object.__setattr__(self, "taper", tap)

    @property
    def deformed_bounds(self):
        """Face positions along each axis after offsets, shape (3, 2)."""
        h = self.half_extents
        return np.stack([-h - self.face_offsets[:, 0], h + self.face_offsets[:, 1]], axis=1)


@dataclass(frozen=True)
class DeformBounds:
    offset_min: float = -0.02
    offset_max: float = 0.02
    taper_min: float = 1.0
    taper_max: float = 1.0

    def validate(self, half_extents=None):
        if self.offset_min > self.offset_max or self.taper_min > self.taper_max:
            raise InvalidInputError("bounds must satisfy min <= max")
        if self.taper_min <= 0:
            raise InvalidInputError("taper bounds must be positive")
        if half_extents is None:
            return
        h = np.asarray(half_extents, dtype=float)
        if np.any(h + self.offset_min <= 0):
            raise InvalidInputError("offset bounds allow the cage to fold over")
        slope = (self.taper_max - self.taper_min) / (2 * self.taper_min)
        if np.any(h + self.offset_min <= (h + self.offset_max) * 2 * slope):
            raise InvalidInputError("taper bounds allow the cage to fold over")


def _normalized(p, cage):
    h = cage.half_extents
    return (p + h) / (2 * h)


def canonical_face_map(p, cage):
    """Move canonical points with the cage faces, then apply the tapers.

    Each axis is remapped affinely so the two faces land on their offset
    positions; a point on a face moves exactly with it. The taper factor of axis
    ``a`` scales the other two coordinates and is computed from the point's
    undeformed position along ``a``.
    """
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) > BOX_TOL * cage.half_extents):
        raise InvalidInputError("point lies too far outside the cage")
    u = _normalized(p, cage)
    off = cage.face_offsets
    moved = p + off[:, 1] * u - off[:, 0] * (1 - u)
    f = cage.taper[:, 0] + (cage.taper[:, 1] - cage.taper[:, 0]) * u
    return moved * _scale(f)


def _scale(f):
    return np.stack([f[..., 1] * f[..., 2], f[..., 0] * f[..., 2], f[..., 0] * f[..., 1]], axis=-1)


def inverse_face_map(q, cage, tol=1e-14, max_iter=100):
    """Invert :func:`canonical_face_map` with damped Newton steps on the undeformed point.

    The forward map is smooth and its Jacobian is available in closed form, so a
    few Newton steps reach machine precision even for strong tapers where plain
    fixed-point iteration crawls or diverges.
    """
    q = np.asarray(q, dtype=float)
    h = cage.half_extents
    off = cage.face_offsets
    span = 2 * h + off.sum(axis=1)
    slope = (cage.taper[:, 1] - cage.taper[:, 0]) / (2 * h)  # df_a / dp_a
    lim = BOX_TOL * h

    def residual(p):
        u = _normalized(p, cage)
        moved = p + off[:, 1] * u - off[:, 0] * (1 - u)
        f = cage.taper[:, 0] + (cage.taper[:, 1] - cage.taper[:, 0]) * u
        return moved * _scale(f) - q, moved, f

    # start from the point with tapers ignored
    p = np.clip((q + h + off[:, 0]) / span * (2 * h) - h, -lim, lim)
    r, moved, f = residual(p)
    scale_tol = tol * max(1.0, float(np.max(h)))
    for _ in range(max_iter):
        err = np.max(np.abs(r), axis=-1)
        if np.max(err, initial=0.0) <= scale_tol:
            break
        J = np.zeros(p.shape + (3,))
        S = _scale(f)
        for a in range(3):
            J[..., a, a] = span[a] / (2 * h[a]) * S[..., a]
            for b in range(3):
                if b != a:
                    c = 3 - a - b
                    J[..., a, b] = moved[..., a] * f[..., c] * slope[b]
        step = np.linalg.solve(J, r[..., None])[..., 0]
        t = np.ones(p.shape[:-1] + (1,))
        for _ in range(30):
            cand = np.clip(p - t * step, -lim, lim)
            rc, mc, fc = residual(cand)
            worse = np.max(np.abs(rc), axis=-1) > err
            if not np.any(worse):
                break
            t = np.where(worse[..., None], t / 2, t)
        p, r, moved, f = cand, rc, mc, fc
    return p


def deform(cloud, pose, cage):
    """Deform object points in the canonical frame of ``pose``; background passes through."""
    if len(cloud) == 0:
        raise InvalidInputError("cloud is empty")
    pts = cloud.points.copy()
    mask = np.ones(len(pts), dtype=bool) if cloud.labels is None else cloud.labels
    canon = pose.to_canonical(pts[mask])
    pts[mask] = pose.apply(canonical_face_map(canon, cage))
    return PointCloud(pts, cloud.labels)


def sample_deformation(half_extents, bounds, seed):
    """Seeded uniform draw of face offsets and tapers within ``bounds``."""
    bounds.validate(half_extents)
    rng = np.random.default_rng(seed)
    off = rng.uniform(bounds.offset_min, bounds.offset_max, (3, 2))
    tap = rng.uniform(bounds.taper_min, bounds.taper_max, (3, 2))
    return DeformCage(half_extents, off, tap)


def deform_variants(cloud, pose, bounds, n=4, seed=0):
    """``n`` deformed copies of ``cloud`` using the pose's bounding box as cage."""
    bounds.validate(pose.size / 2)
    seeds = np.random.SeedSequence(seed).spawn(n)
    out = []
    for s in seeds:
        cage = sample_deformation(pose.size / 2, bounds, s)
        out.append((cage, deform(cloud, pose, cage)))
    return out


# --- depth ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DepthImage:
    depth: np.ndarray  # (height, width), meters, 0 = invalid
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise InvalidInputError("depth must be a non-empty 2D grid")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InvalidInputError("depth values must be finite and >= 0")
        object.__setattr__(self, "depth", d)

    @property
    def width(self):
        return self.depth.shape[1]

    @property
    def height(self):
        return self.depth.shape[0]


@dataclass(frozen=True)
class Box2d:
    """Half-open pixel box ``[x_min, x_max) x [y_min, y_max)``."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidInputError(f"degenerate box {self}")

    def clamp(self, width, height):
        b = Box2d.__new__(Box2d)
        vals = (max(self.x_min, 0), max(self.y_min, 0), min(self.x_max, width), min(self.y_max, height))
        for k, v in zip(("x_min", "y_min", "x_max", "y_max"), vals):
            object.__setattr__(b, k, int(v))
        return b

    @property
    def empty(self):
        return self.x_min >= self.x_max or self.y_min >= self.y_max

    def intersect(self, other):
        b = Box2d.__new__(Box2d)
        vals = (max(self.x_min, other.x_min), max(self.y_min, other.y_min),
                min(self.x_max, other.x_max), min(self.y_max, other.y_max))
        for k, v in zip(("x_min", "y_min", "x_max", "y_max"), vals):
            object.__setattr__(b, k, int(v))
        return b

    def contains(self, u, v):
        return (self.x_min <= u) & (u < self.x_max) & (self.y_min <= v) & (v < self.y_max)


def _backproject(depth, image, region):
    """Points and their (u, v) pixels for nonzero depth inside ``region``."""
    if region.empty:
        return np.zeros((0, 3)), np.zeros((0, 2), dtype=int)
    sub = depth[region.y_min: region.y_max, region.x_min: region.x_max]
    vv, uu = np.nonzero(sub > 0)
    z = sub[vv, uu]
    u = uu + region.x_min
    v = vv + region.y_min
    x = (u - image.cx) * z / image.fx
    y = (v - image.cy) * z / image.fy
    return np.stack([x, y, z], axis=1), np.stack([u, v], axis=1)


def backproject(image, region):
    """Pinhole back-projection of the valid pixels inside ``region``."""
    region = region.clamp(image.width, image.height)
    if region.empty:
        raise InvalidInputError("region does not overlap the image")
    pts, _ = _backproject(image.depth, image, region)
    return PointCloud(pts)


def project(points, fx, fy, cx, cy):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    return np.stack([fx * points[:, 0] / points[:, 2] + cx, fy * points[:, 1] / points[:, 2] + cy], axis=1)


def fast_relabel(image, gt, aug):
    """Label points inside an augmented 2D box without per-pixel box tests.

    The intersection of ``gt`` and ``aug`` is back-projected as object points;
    its depth is then zeroed in a working copy so that back-projecting ``aug``
    yields only the newly added region, labelled background. Pixels of ``gt``
    outside ``aug`` never enter the sample.

    Returns the labelled cloud and the ``(u, v)`` pixel of every point.
    """
    gt = gt.clamp(image.width, image.height)
    aug = aug.clamp(image.width, image.height)
    if aug.empty:
        raise InvalidInputError("augmented box does not overlap the image")
    inter = gt.intersect(aug)
    obj_pts, obj_px = _backproject(image.depth, image, inter)
    work = image.depth.copy()
    if not inter.empty:
        work[inter.y_min: inter.y_max, inter.x_min: inter.x_max] = 0.0
    bg_pts, bg_px = _backproject(work, image, aug)
    labels = np.concatenate([np.ones(len(obj_pts), bool), np.zeros(len(bg_pts), bool)])
    cloud = PointCloud(np.vstack([obj_pts, bg_pts]), labels)
    return cloud, np.vstack([obj_px, bg_px])
