"""Plain-text file formats and atomic writes.

* point cloud: one point per line, ``x y z [label]`` with label 1 = object, 0 = background
* depth image: header ``width height fx fy cx cy`` then ``height`` rows of ``width`` depths
* poses: one pose per line, 15 numbers ``r00 r01 ... r22 tx ty tz sx sy sz``
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

from .augment import DepthImage
from .errors import InvalidInputError
from .structures import PointCloud, Pose


def fmt(x):
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def _rows(path):
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def read_cloud(path):
    pts, labels = [], []
    width = None
    for lineno, tok in _rows(path):
        if len(tok) not in (3, 4) or (width is not None and len(tok) != width):
            raise InvalidInputError(f"{path}:{lineno}: expected 'x y z [label]'")
        width = len(tok)
        try:
            pts.append([float(t) for t in tok[:3]])
            if width == 4:
                labels.append(int(tok[3]) != 0)
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    if not pts:
        raise InvalidInputError(f"{path}: no points")
    return PointCloud(np.array(pts), np.array(labels) if width == 4 else None)


def cloud_text(cloud):
    lines = []
    for i, p in enumerate(cloud.points):
        row = [fmt(v) for v in p]
        if cloud.labels is not None:
            row.append("1" if cloud.labels[i] else "0")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def read_depth(path):
    rows = list(_rows(path))
    if not rows or len(rows[0][1]) != 6:
        raise InvalidInputError(f"{path}: header must be 'width height fx fy cx cy'")
    try:
        w, h = int(rows[0][1][0]), int(rows[0][1][1])
        fx, fy, cx, cy = (float(t) for t in rows[0][1][2:])
        data = np.array([[float(t) for t in r] for _, r in rows[1:]])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if data.shape != (h, w):
        raise InvalidInputError(f"{path}: expected {h} rows of {w} depths, got shape {data.shape}")
    return DepthImage(data, fx, fy, cx, cy)


def depth_text(image):
    head = f"{image.width} {image.height} {fmt(image.fx)} {fmt(image.fy)} {fmt(image.cx)} {fmt(image.cy)}"
    body = [" ".join(fmt(v) for v in row) for row in image.depth]
    return "\n".join([head, *body]) + "\n"


def read_poses(path):
    poses = []
    for lineno, tok in _rows(path):
        if len(tok) != 15:
            raise InvalidInputError(f"{path}:{lineno}: a pose needs 15 numbers")
        try:
            v = np.array([float(t) for t in tok])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
        poses.append(Pose(v[:9].reshape(3, 3), v[9:12], v[12:15]))
    return poses


def poses_text(poses):
    return "".join(
        " ".join(fmt(x) for x in np.concatenate([p.r.ravel(), p.t, p.size])) + "\n" for p in poses
    )


def write_atomic(path, text):
    """Write via a temp file in the same directory, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    return buf.getvalue()


def jsonl_text(rows):
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
