"""2D similarity alignment of projected landmarks to a reference template.

Role selection is gated by yaw. Frontal faces (``|yaw| <= 30`` degrees) use both
eye centers, the nose tip and both mouth corners. Beyond that only the nose tip
and the eye center nearer the camera are used. With ``R = Rz Ry Rx`` and
camera axes x-right / y-down / z-forward, positive yaw brings the subject's
left side toward the camera, so the left eye center is kept for yaw > 30 and
the right one for yaw < -30.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import DegenerateConfigurationError
from .geometry import matrix_to_euler, project_array
from .schemes import role_indices

FRONTAL_YAW_DEG = 30.0
FRONTAL_ROLES = ("right_eye_center", "left_eye_center", "nose_tip", "right_mouth_corner", "left_mouth_corner")

# Template positions as fractions of the crop (w, h).
DEFAULT_TARGETS = {
    "right_eye_center": (0.30, 0.35),
    "left_eye_center": (0.70, 0.35),
    "nose_tip": (0.50, 0.55),
    "right_mouth_corner": (0.35, 0.72),
    "left_mouth_corner": (0.65, 0.72),
}


@dataclass(frozen=True)
class Similarity2D:
    """``x -> scale * Rot(rotation) @ x + translation``; rotation in radians."""

    scale: float = 1.0
    rotation: float = 0.0
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("similarity scale must be finite and positive")
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    @property
    def matrix(self):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        tx, ty = self.translation
        return np.array([[self.scale * c, -self.scale * s, tx],
                         [self.scale * s, self.scale * c, ty]])

    def apply(self, pts):
        M = self.matrix
        return np.asarray(pts, dtype=float) @ M[:, :2].T + M[:, 2]

    def inverse(self):
        c, s = math.cos(-self.rotation), math.sin(-self.rotation)
        tx, ty = self.translation
        inv_s = 1.0 / self.scale
        return Similarity2D(inv_s, -self.rotation,
                            (-inv_s * (c * tx - s * ty), -inv_s * (s * tx + c * ty)))

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "scale": self.scale,
                "rotation": self.rotation, "translation": list(self.translation)}


@dataclass(frozen=True)
class ReferenceTemplate:
    """Named target positions in output-crop pixels."""

    size: int = 128
    targets: dict = field(default=None)

    def __post_init__(self):
        if self.targets is None:
            t = {k: (fx * self.size, fy * self.size) for k, (fx, fy) in DEFAULT_TARGETS.items()}
            object.__setattr__(self, "targets", t)
        missing = set(FRONTAL_ROLES) - set(self.targets)
        if missing:
            raise ValueError(f"template lacks targets for {sorted(missing)}")

    def to_dict(self):
        return {"size": self.size, "targets": {k: list(v) for k, v in self.targets.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d.get("size", 128)), {k: tuple(v) for k, v in d["targets"].items()} if "targets" in d else None)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def select_alignment_points(pose):
    """Role names used for alignment at this pose (step function of yaw)."""
    yaw = math.degrees(matrix_to_euler(pose.matrix).yaw)
    if abs(yaw) <= FRONTAL_YAW_DEG:
        return list(FRONTAL_ROLES)
    eye = "left_eye_center" if yaw > 0 else "right_eye_center"
    return [eye, "nose_tip"]


def estimate_similarity(src, dst, weights=None, min_span=1e-12):
    """Least-squares similarity (uniform scale, no reflection) mapping src to dst.

    Closed form in complex arithmetic: with centered points ``z`` and ``w``,
    the linear part is ``sum(w * conj(z)) / sum(|z|^2)``.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2 or len(src) < 2:
        raise ValueError("need matching (n, 2) point arrays with n >= 2")
    w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=float)
    z = src[:, 0] + 1j * src[:, 1]
    q = dst[:, 0] + 1j * dst[:, 1]
    zm = (w * z).sum() / w.sum()
    qm = (w * q).sum() / w.sum()
    zc, qc = z - zm, q - qm
    denom = float((w * (zc * zc.conj()).real).sum())
    span = math.sqrt(denom / w.sum())
    if span <= min_span:
        raise DegenerateConfigurationError("source points coincide")
    a = (w * qc * zc.conj()).sum() / denom
    if a == 0:
        raise DegenerateConfigurationError("target points coincide")
    b = qm - a * zm
    return Similarity2D(abs(a), math.atan2(a.imag, a.real), (b.real, b.imag))


def role_points_3d(model, roles):
    lm = getattr(model, "landmarks", model)
    return np.array([lm.points[role_indices(lm.roles, r)].mean(axis=0) for r in roles])


def align_face(pose, model, cam, template=None, return_roles=False):
    """Similarity taking the projected alignment roles to the template."""
    template = ReferenceTemplate() if template is None else template
    roles = select_alignment_points(pose)
    src, _ = project_array(role_points_3d(model, roles), pose, cam)
    dst = np.array([template.targets[r] for r in roles], dtype=float)
    sim = estimate_similarity(src, dst, min_span=1e-6 * template.size)
    return (sim, roles) if return_roles else sim


def warp_points(sim, lm):
    return lm.with_points(sim.apply(lm.points))
