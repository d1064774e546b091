"""Rotation parameterizations, 6DoF poses and pinhole projection.

Conventions
-----------
* Camera frame: x to the image right, y down, z along the optical axis.
* Rotation vectors are axis-angle, ``theta = ||r||`` and canonical form keeps
  ``theta`` in ``[0, pi]``.
* Euler angles compose as ``R = Rz(roll) @ Ry(yaw) @ Rx(pitch)``.
* Pixel coordinates refer to pixel centers; the crop of side ``n`` spans
  ``[-0.5, n - 0.5]`` and its center is ``(n - 1) / 2``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidRotationError, ProjectionError, SchemeError
from .schemes import get_scheme, role_indices

SMALL_ANGLE = 1e-12
TAYLOR_ANGLE = 1e-6
ORTHO_TOL = 1e-6


def skew(v):
    """Cross-product matrix ``[v]x`` such that ``skew(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def canonical_rotvec(r):
    """Return the equivalent rotation vector with angle in ``[0, pi]``."""
    r = np.asarray(r, dtype=float).reshape(3)
    if not np.all(np.isfinite(r)):
        raise InvalidRotationError("rotation vector must be finite")
    theta = float(np.linalg.norm(r))
    if theta <= math.pi:
        return r.copy()
    u = r / theta
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta > math.pi:
        theta = 2.0 * math.pi - theta
        u = -u
    return u * theta


def rodrigues_to_matrix(r):
    """Rotation matrix from an axis-angle vector.

    Uses the unit axis ``u = r / theta`` inside the Rodrigues formula. Below
    ``1e-6`` rad the coefficients switch to their Taylor expansions, and below
    ``1e-12`` the identity is returned.
    """
    r = np.asarray(r, dtype=float).reshape(3)
    theta = float(np.linalg.norm(r))
    if theta < SMALL_ANGLE:
        return np.eye(3)
    K = skew(r)
    if theta < TAYLOR_ANGLE:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
        return np.eye(3) + a * K + b * (K @ K)
    u = r / theta
    c, s = math.cos(theta), math.sin(theta)
    return c * np.eye(3) + (1.0 - c) * np.outer(u, u) + s * skew(u)


def check_rotation(R, tol=ORTHO_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidRotationError("rotation matrix must be a finite 3x3 array")
    resid = np.abs(R.T @ R - np.eye(3)).max()
    if resid > tol:
        raise InvalidRotationError(f"matrix is not orthonormal (residual {resid:.3g})")
    if np.linalg.det(R) < 0:
        raise InvalidRotationError("matrix is a reflection (det < 0)")
    return R


def matrix_to_rodrigues(R):
    """Canonical rotation vector of a rotation matrix.

    Raises :class:`InvalidRotationError` when ``R`` is not a rotation within
    ``1e-6``.
    """
    R = check_rotation(R)
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = float(np.linalg.norm(w))
    c = 0.5 * (np.trace(R) - 1.0)
    theta = math.atan2(s, c)
    if theta < TAYLOR_ANGLE:
        return w * (1.0 + theta * theta / 6.0)
    if c > 0.0:
        return w * (theta / s)
    # Near pi the antisymmetric part vanishes; read the axis off the
    # symmetric part, using the column with the largest diagonal entry.
    B = 0.5 * (R + R.T) - c * np.eye(3)
    B /= 1.0 - c
    k = int(np.argmax(np.diag(B)))
    u = B[:, k] / math.sqrt(B[k, k])
    d = float(u @ w)
    if d < 0.0:
        u = -u
    elif d == 0.0 and u[np.argmax(np.abs(u))] < 0.0:
        u = -u
    return u * theta


def rodrigues_jacobian(r):
    """Derivatives ``dR/dr_i`` stacked as a ``(3, 3, 3)`` array."""
    r = np.asarray(r, dtype=float).reshape(3)
    theta2 = float(r @ r)
    E = np.eye(3)
    if theta2 < TAYLOR_ANGLE**2:
        return np.stack([skew(E[i]) for i in range(3)])
    R = rodrigues_to_matrix(r)
    K = skew(r)
    out = np.empty((3, 3, 3))
    for i in range(3):
        out[i] = (r[i] * K + skew(np.cross(r, (E - R)[:, i]))) @ R / theta2
    return out


def rotation_angle(R1, R2):
    """Geodesic angle (radians) between two rotation matrices."""
    c = 0.5 * (np.trace(np.asarray(R1).T @ np.asarray(R2)) - 1.0)
    D = np.asarray(R1).T @ np.asarray(R2)
    s = 0.5 * np.linalg.norm([D[2, 1] - D[1, 2], D[0, 2] - D[2, 0], D[1, 0] - D[0, 1]])
    return math.atan2(s, c)


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class EulerAngles:
    """Head-pose angles in radians; ``degenerate`` marks gimbal lock."""

    pitch: float
    yaw: float
    roll: float
    degenerate: bool = False

    def degrees(self):
        return tuple(math.degrees(a) for a in (self.pitch, self.yaw, self.roll))


def euler_to_matrix(e):
    return rot_z(e.roll) @ rot_y(e.yaw) @ rot_x(e.pitch)


def matrix_to_euler(R, eps=1e-6):
    """Decompose ``R = Rz(roll) Ry(yaw) Rx(pitch)``.

    Yaw is the middle angle and lies in ``[-pi/2, pi/2]``. Within ``eps`` of
    ``|yaw| = pi/2`` the decomposition is not unique: roll is set to 0 and the
    result is flagged ``degenerate``.
    """
    R = np.asarray(R, dtype=float)
    sy = -float(np.clip(R[2, 0], -1.0, 1.0))
    cy = math.hypot(R[0, 0], R[1, 0])
    yaw = math.atan2(sy, cy)
    if abs(yaw) < math.pi / 2 - eps:
        pitch = math.atan2(R[2, 1], R[2, 2])
        roll = math.atan2(R[1, 0], R[0, 0])
        return EulerAngles(pitch, yaw, roll)
    # Gimbal lock: only pitch -/+ roll is observable.
    if sy > 0:
        pitch = math.atan2(R[0, 1], R[1, 1])
    else:
        pitch = math.atan2(-R[0, 1], R[1, 1])
    return EulerAngles(pitch, yaw, 0.0, degenerate=True)


@dataclass(frozen=True, eq=False)
class Pose6DoF:
    """Rigid head pose: canonical rotation vector plus translation (model units)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_vector(cls, h):
        h = np.asarray(h, dtype=float).reshape(6)
        return cls(h[:3], h[3:])

    @classmethod
    def from_matrix(cls, R, t):
        return cls(matrix_to_rodrigues(R), t)

    @classmethod
    def from_euler(cls, pitch, yaw, roll, t):
        return cls.from_matrix(euler_to_matrix(EulerAngles(pitch, yaw, roll)), t)

    def as_vector(self):
        return np.concatenate([self.rotation, self.translation])

    @property
    def matrix(self):
        return rodrigues_to_matrix(self.rotation)

    def euler(self):
        return matrix_to_euler(self.matrix)

    def canonical(self):
        return Pose6DoF(canonical_rotvec(self.rotation), self.translation)

    def to_dict(self):
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["rotation"], d["translation"])

    def __repr__(self):
        r = np.array2string(self.rotation, precision=4)
        t = np.array2string(self.translation, precision=4)
        return f"Pose6DoF(rotation={r}, translation={t})"


@dataclass(frozen=True)
class CameraIntrinsics:
    focal: float
    principal_point: tuple

    def __post_init__(self):
        if not self.focal > 0:
            raise ValueError("focal length must be positive")
        object.__setattr__(self, "principal_point", tuple(float(c) for c in self.principal_point))

    @classmethod
    def for_crop(cls, side):
        """Shared convention: focal = side, principal point = crop center."""
        c = (side - 1) / 2.0
        return cls(float(side), (c, c))

    @property
    def matrix(self):
        cx, cy = self.principal_point
        f = self.focal
        return np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Indexed point set under a named scheme.

    ``roles`` maps semantic names to an index or list of indices and defaults to
    the scheme's table. ``visibility`` is an optional boolean mask.
    """

    points: np.ndarray
    scheme: str = "ibug68"
    roles: dict = field(default=None)
    visibility: np.ndarray | None = None

    dim = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or (self.dim is not None and pts.shape[1] != self.dim):
            raise SchemeError(f"{type(self).__name__} needs an (m, {self.dim}) array, got {pts.shape}")
        sch = get_scheme(self.scheme)
        sch.check_count(len(pts))
        roles = dict(sch.roles) if self.roles is None else dict(self.roles)
        for name in roles:
            idx = role_indices(roles, name)
            if idx.size == 0 or idx.min() < 0 or idx.max() >= len(pts):
                raise SchemeError(f"role {name!r} points outside the set")
        vis = self.visibility
        if vis is not None:
            vis = np.asarray(vis, dtype=bool).reshape(len(pts))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "visibility", vis)

    def __len__(self):
        return len(self.points)

    def role_point(self, name):
        return self.points[role_indices(self.roles, name)].mean(axis=0)

    def with_points(self, points, visibility=None):
        vis = self.visibility if visibility is None else visibility
        return type(self)(points, self.scheme, self.roles, vis)

    def to_dict(self):
        d = {"scheme": self.scheme, "points": self.points.tolist(), "roles": self.roles}
        if self.visibility is not None:
            d["visibility"] = self.visibility.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["points"], d.get("scheme", "ibug68"), d.get("roles"), d.get("visibility"))


class LandmarkSet2D(LandmarkSet):
    dim = 2


class LandmarkSet3D(LandmarkSet):
    dim = 3


def build_projection_matrix(pose, cam):
    """The 3x4 matrix ``A [R | t]``."""
    Rt = np.hstack([pose.matrix, pose.translation[:, None]])
    return cam.matrix @ Rt


def project_array(P, pose, cam):
    """Project an ``(m, 3)`` array; returns ``(uv, depth)``."""
    M = build_projection_matrix(pose, cam)
    X = np.asarray(P, dtype=float)
    h = X @ M[:, :3].T + M[:, 3]
    depth = h[:, 2]
    bad = np.flatnonzero(~(depth > 0))
    if bad.size:
        raise ProjectionError(bad[0], depth[bad[0]])
    return h[:, :2] / depth[:, None], depth


def project_points(P, pose, cam):
    """Pinhole projection of a 3D landmark set to a 2D set of the same scheme."""
    uv, _ = project_array(P.points, pose, cam)
    return LandmarkSet2D(uv, P.scheme, P.roles)
