"""Baseline rotation representations and conversions through the rotation matrix.

All functions accept a single value or a leading batch dimension. Conventions:

* quaternions are ``(w, x, y, z)`` with ``w >= 0`` on every decode;
* Euler angles are ``(yaw, pitch, roll)`` in the intrinsic Z-Y-X order,
  ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``;
* axis-angle is a unit axis plus an angle in ``[0, pi]``;
* r6d is the first two matrix columns concatenated, ``(a1, a2)``.
"""

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

UNIT_TOL = 1e-6
GIMBAL_TOL = 1e-7
DEFAULT_AXIS = np.array([0.0, 0.0, 1.0])


def _as_batch(x, tail):
    x = np.asarray(x, dtype=float)
    if x.shape[-len(tail):] != tail:
        raise InvalidInputError(f"expected trailing shape {tail}, got {x.shape}")
    single = x.ndim == len(tail)
    return x.reshape((-1,) + tail), single


def _unbatch(x, single):
    return x[0] if single else x


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        return False
    RtR = np.swapaxes(R, -1, -2) @ R
    ortho = np.all(np.abs(RtR - np.eye(3)) <= tol)
    return bool(ortho and np.all(np.abs(np.linalg.det(R) - 1.0) <= tol))


def random_rotations(n, rng):
    """Haar-uniform rotation matrices, shape ``(n, 3, 3)``.

    Uses Shoemake's subgroup algorithm to draw uniform unit quaternions.
    """
    rng = np.random.default_rng(rng)
    u1, u2, u3 = rng.random((3, n))
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    q = np.stack(
        [
            b * np.cos(2 * np.pi * u3),
            a * np.sin(2 * np.pi * u2),
            a * np.cos(2 * np.pi * u2),
            b * np.sin(2 * np.pi * u3),
        ],
        axis=-1,
    )
    return quat_to_matrix(q)


# --- quaternion --------------------------------------------------------------


def canonical_quat(q):
    """Flip sign so ``w >= 0``; on ``w == 0`` the first nonzero of x, y, z is made positive."""
    q, single = _as_batch(q, (4,))
    q = q.copy()
    idx = np.arange(len(q))
    lead = np.argmax(np.abs(q) > 0.0, axis=1)
    # w decides whenever it is nonzero
    lead = np.where(q[:, 0] != 0.0, 0, lead)
    q[q[idx, lead] < 0] *= -1.0
    return _unbatch(q, single)


def quat_to_matrix(q):
    q, single = _as_batch(q, (4,))
    norm = np.linalg.norm(q, axis=1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise InvalidInputError("quaternion must have unit norm")
    w, x, y, z = (q / norm[:, None]).T
    R = np.empty((len(q), 3, 3))
    R[:, 0, 0] = 1 - 2 * (y * y + z * z)
    R[:, 0, 1] = 2 * (x * y - w * z)
    R[:, 0, 2] = 2 * (x * z + w * y)
    R[:, 1, 0] = 2 * (x * y + w * z)
    R[:, 1, 1] = 1 - 2 * (x * x + z * z)
    R[:, 1, 2] = 2 * (y * z - w * x)
    R[:, 2, 0] = 2 * (x * z - w * y)
    R[:, 2, 1] = 2 * (y * z + w * x)
    R[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return _unbatch(R, single)


def matrix_to_quat(R):
    """Shepperd's method: pick the largest of the four diagonal combinations."""
    R, single = _as_batch(R, (3, 3))
    m00, m11, m22 = R[:, 0, 0], R[:, 1, 1], R[:, 2, 2]
    cand = np.stack(
        [
            1 + m00 + m11 + m22,
            1 + m00 - m11 - m22,
            1 - m00 + m11 - m22,
            1 - m00 - m11 + m22,
        ],
        axis=1,
    )
    k = np.argmax(cand, axis=1)
    s = np.sqrt(np.maximum(cand[np.arange(len(R)), k], 1e-300))
    q = np.empty((len(R), 4))
    d21 = R[:, 2, 1] - R[:, 1, 2]
    d02 = R[:, 0, 2] - R[:, 2, 0]
    d10 = R[:, 1, 0] - R[:, 0, 1]
    s01 = R[:, 0, 1] + R[:, 1, 0]
    s02 = R[:, 0, 2] + R[:, 2, 0]
    s12 = R[:, 1, 2] + R[:, 2, 1]
    rows = [
        (s, d21 / s, d02 / s, d10 / s),
        (d21 / s, s, s01 / s, s02 / s),
        (d02 / s, s01 / s, s, s12 / s),
        (d10 / s, s02 / s, s12 / s, s),
    ]
    for case, comps in enumerate(rows):
        mask = k == case
        q[mask] = 0.5 * np.stack([c[mask] for c in comps], axis=1)
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return _unbatch(canonical_quat(q), single)


# --- Euler ZYX -----------------------------------------------------------------


def euler_to_matrix(euler):
    e, single = _as_batch(euler, (3,))
    cy, sy = np.cos(e[:, 0]), np.sin(e[:, 0])
    cp, sp = np.cos(e[:, 1]), np.sin(e[:, 1])
    cr, sr = np.cos(e[:, 2]), np.sin(e[:, 2])
    R = np.empty((len(e), 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return _unbatch(R, single)


def matrix_to_euler(R, return_degenerate=False):
    """Decode ``(yaw, pitch, roll)`` with pitch in ``[-pi/2, pi/2]``.

    When pitch is within ``GIMBAL_TOL`` of +-pi/2 only yaw - roll (or yaw + roll)
    is observable; roll is then set to 0 and the sample is flagged degenerate.
    """
    R, single = _as_batch(R, (3, 3))
    pitch = np.arctan2(-R[:, 2, 0], np.hypot(R[:, 0, 0], R[:, 1, 0]))
    yaw = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    roll = np.arctan2(R[:, 2, 1], R[:, 2, 2])
    degenerate = np.abs(np.abs(pitch) - np.pi / 2) < GIMBAL_TOL
    if np.any(degenerate):
        d = degenerate
        yaw[d] = np.arctan2(-R[d, 0, 1], R[d, 1, 1])
        roll[d] = 0.0
        pitch[d] = np.copysign(np.pi / 2, pitch[d])
    out = _unbatch(np.stack([yaw, pitch, roll], axis=1), single)
    if return_degenerate:
        return out, _unbatch(degenerate, single)
    return out


# --- axis-angle -------------------------------------------------------------------


def axis_angle_to_matrix(axis, angle):
    axis, single = _as_batch(axis, (3,))
    angle = np.broadcast_to(np.asarray(angle, dtype=float), (len(axis),)) if np.ndim(angle) == 0 \
        else np.asarray(angle, dtype=float).reshape(-1)
    norm = np.linalg.norm(axis, axis=1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise InvalidInputError("axis must have unit norm")
    k = axis / norm[:, None]
    K = np.zeros((len(k), 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -k[:, 2], k[:, 1]
    K[:, 1, 0], K[:, 1, 2] = k[:, 2], -k[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -k[:, 1], k[:, 0]
    s = np.sin(angle)[:, None, None]
    c = (1 - np.cos(angle))[:, None, None]
    R = np.eye(3) + s * K + c * (K @ K)
    return _unbatch(R, single)


def matrix_to_axis_angle(R):
    """Return ``(axis, angle)``; the axis defaults to +z when the angle is 0."""
    q = np.atleast_2d(matrix_to_quat(R))
    single = np.ndim(R) == 2
    v = q[:, 1:]
    vn = np.linalg.norm(v, axis=1)
    angle = 2.0 * np.arctan2(vn, q[:, 0])
    axis = np.tile(DEFAULT_AXIS, (len(q), 1))
    nz = vn > 0
    axis[nz] = v[nz] / vn[nz, None]
    if single:
        return axis[0], float(angle[0])
    return axis, angle


def rotvec_to_matrix(rotvec):
    rv, single = _as_batch(rotvec, (3,))
    angle = np.linalg.norm(rv, axis=1)
    axis = np.tile(DEFAULT_AXIS, (len(rv), 1))
    nz = angle > 0
    axis[nz] = rv[nz] / angle[nz, None]
    return _unbatch(axis_angle_to_matrix(axis, angle), single)


# --- r6d ---------------------------------------------------------------------------


def gram_schmidt(a1, a2, eps=1e-9):
    """Orthonormal frame ``[b1 | b2 | b1 x b2]`` from two (unnormalized) vectors."""
    a1 = np.atleast_2d(np.asarray(a1, dtype=float))
    a2 = np.atleast_2d(np.asarray(a2, dtype=float))
    n1 = np.linalg.norm(a1, axis=1)
    if np.any(n1 <= eps):
        raise DegenerateInputError("first vector has (near) zero length")
    b1 = a1 / n1[:, None]
    u2 = a2 - np.sum(b1 * a2, axis=1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=1)
    if np.any(n2 <= eps * np.maximum(np.linalg.norm(a2, axis=1), 1.0)):
        raise DegenerateInputError("vectors are (near) parallel")
    b2 = u2 / n2[:, None]
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def r6d_to_matrix(r6d):
    x, single = _as_batch(r6d, (6,))
    return _unbatch(gram_schmidt(x[:, :3], x[:, 3:]), single)


def matrix_to_r6d(R):
    R, single = _as_batch(R, (3, 3))
    return _unbatch(np.concatenate([R[:, :, 0], R[:, :, 1]], axis=1), single)


def project_to_so3(M):
    """Nearest rotation in Frobenius norm (SVD with determinant fix)."""
    M, single = _as_batch(M, (3, 3))
    U, _, Vt = np.linalg.svd(M)
    d = np.sign(np.linalg.det(U @ Vt))
    d[d == 0] = 1.0
    U[:, :, 2] *= d[:, None]
    return _unbatch(U @ Vt, single)


# --- metrics & helpers ----------------------------------------------------------------


def geodesic_error(R1, R2):
    """Angular distance in radians, ``arccos((tr(R1^T R2) - 1) / 2)`` clamped to [0, pi]."""
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    tr = np.einsum("...ij,...ij->...", R1, R2)
    cos = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    # arccos loses precision near 0; use the skew part there
    rel = np.swapaxes(R1, -1, -2) @ R2
    skew = np.stack(
        [rel[..., 2, 1] - rel[..., 1, 2], rel[..., 0, 2] - rel[..., 2, 0], rel[..., 1, 0] - rel[..., 0, 1]],
        axis=-1,
    )
    sin = 0.5 * np.linalg.norm(skew, axis=-1)
    ang = np.arctan2(sin, cos)
    return float(ang) if np.ndim(ang) == 0 else ang


def rotate_about_axis(v, axis, angle):
    """Rodrigues rotation of ``v`` about the unit ``axis``; broadcasts over rows."""
    v = np.asarray(v, dtype=float)
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    if np.all(angle == 0):
        return v.copy()
    c = np.cos(angle)[..., None]
    s = np.sin(angle)[..., None]
    kv = np.sum(axis * v, axis=-1, keepdims=True)
    return v * c + np.cross(axis, v) * s + axis * kv * (1 - c)
