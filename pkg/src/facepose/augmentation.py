"""In-plane training-set augmentation with label recomputation.

Boxes and landmarks are moved by a random similarity; the pose label is then
re-solved from the moved landmarks, so labels always agree with the geometry
the network sees. Pixels are not touched here.

Transform order: the similarity rotates and scales about the box center, then
translates by ``(dx, dy)``::

    p' = c + (dx, dy) + scale * Rot(rotation) @ (p - c)

Rotation is in degrees. With y pointing down it turns the face clockwise as
displayed, which adds the same angle to the roll of the pose label when the box
center is the principal point.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import SchemeError
from .geometry import CameraIntrinsics, LandmarkSet2D, Pose6DoF
from .pnp import synthesize_pose_label, reprojection_rms
from .schemes import get_scheme

TRANSLATION_RANGE = 0.1
SCALE_RANGE = (0.75, 1.25)
ROTATION_SIGMA_DEG = 30.0


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("box width and height must be positive")

    @property
    def center(self):
        return np.array([self.x + self.width / 2.0, self.y + self.height / 2.0])

    @classmethod
    def for_crop(cls, side):
        """Box covering pixel centers ``0 .. side - 1``."""
        return cls(-0.5, -0.5, float(side), float(side))

    def intrinsics(self):
        """Camera for labels: focal = longer side, principal point = box center."""
        return CameraIntrinsics(float(max(self.width, self.height)), tuple(self.center))

    def to_dict(self):
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["x"]), float(d["y"]), float(d["width"]), float(d["height"]))


@dataclass(frozen=True)
class AugmentationParams:
    dx: float = 0.0
    dy: float = 0.0
    scale: float = 1.0
    rotation: float = 0.0
    mirrored: bool = False

    def __post_init__(self):
        vals = (self.dx, self.dy, self.scale, self.rotation)
        if not all(math.isfinite(v) for v in vals) or not self.scale > 0:
            raise ValueError("augmentation parameters must be finite with scale > 0")

    def inverse(self):
        """Parameters undoing the in-plane part of this transform (mirror kept)."""
        a = math.radians(self.rotation)
        c, s = math.cos(-a), math.sin(-a)
        d = np.array([self.dx, self.dy]) / self.scale
        d = -np.array([c * d[0] - s * d[1], s * d[0] + c * d[1]])
        return AugmentationParams(float(d[0]), float(d[1]), 1.0 / self.scale, -self.rotation, self.mirrored)

    def to_dict(self):
        return {"dx": self.dx, "dy": self.dy, "scale": self.scale,
                "rotation": self.rotation, "mirrored": self.mirrored}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["dx"]), float(d["dy"]), float(d["scale"]), float(d["rotation"]), bool(d["mirrored"]))


@dataclass(frozen=True, eq=False)
class AugmentedSample:
    params: AugmentationParams
    transformed_box: BoundingBox
    transformed_landmarks: LandmarkSet2D
    pose_label: Pose6DoF
    reprojection_rms: float

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "box": self.transformed_box.to_dict(),
            "landmarks": self.transformed_landmarks.to_dict(),
            "pose": self.pose_label.to_dict(),
            "reprojection_rms": self.reprojection_rms,
        }


def sample_params(box, rng):
    """Draw one set of parameters; ``rng`` is a ``numpy.random.Generator``.

    Draw order is fixed (dx, dy, scale, rotation, mirror) so a seed fully
    determines the result.
    """
    dx = rng.uniform(-TRANSLATION_RANGE, TRANSLATION_RANGE) * box.width
    dy = rng.uniform(-TRANSLATION_RANGE, TRANSLATION_RANGE) * box.height
    scale = rng.uniform(*SCALE_RANGE)
    rotation = ROTATION_SIGMA_DEG * rng.standard_normal()
    mirrored = bool(rng.integers(2))
    return AugmentationParams(float(dx), float(dy), float(scale), float(rotation), mirrored)


def similarity_matrix(params, center):
    """3x3 homogeneous matrix of the in-plane transform about ``center``."""
    a = math.radians(params.rotation)
    c, s = math.cos(a), math.sin(a)
    L = params.scale * np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    T = np.eye(3)
    T[:2, :2] = L
    T[:2, 2] = center + (params.dx, params.dy) - L @ center
    return T


def apply_transform(params, box, lm):
    """Move box and landmarks by the in-plane part of ``params``.

    The box keeps its aspect ratio: it is re-centered on the moved center and
    its sides are multiplied by ``scale``. Mirroring is handled separately by
    :func:`mirror_sample`.
    """
    T = similarity_matrix(params, box.center)
    pts = lm.points @ T[:2, :2].T + T[:2, 2]
    c = box.center + (params.dx, params.dy)
    w, h = box.width * params.scale, box.height * params.scale
    return BoundingBox(float(c[0] - w / 2), float(c[1] - h / 2), w, h), lm.with_points(pts)


def mirror_sample(lm, image_width):
    """Horizontal flip ``x -> image_width - 1 - x`` with left/right relabeling."""
    perm = get_scheme(lm.scheme).mirror
    if perm is None:
        raise SchemeError(f"scheme {lm.scheme!r} has no left/right permutation")
    perm = np.asarray(perm)
    pts = lm.points.copy()
    pts[:, 0] = image_width - 1 - pts[:, 0]
    vis = None if lm.visibility is None else lm.visibility[perm]
    return lm.with_points(pts[perm], visibility=vis)


def mirror_box(box, image_width):
    return BoundingBox(image_width - 1 - (box.x + box.width), box.y, box.width, box.height)


def augment(params, box, lm, model, cam):
    """Apply fixed ``params`` and recompute the label."""
    new_box, new_lm = apply_transform(params, box, lm)
    if params.mirrored:
        # Flip about the principal point's column so the camera is unchanged.
        width = 2.0 * cam.principal_point[0] + 1.0
        new_lm = mirror_sample(new_lm, width)
        new_box = mirror_box(new_box, width)
    result = synthesize_pose_label(new_lm, model, cam, return_result=True)
    return AugmentedSample(params, new_box, new_lm, result.pose, result.rms_reprojection_error)


def make_augmented_sample(box, lm, rng, model, cam=None):
    """Sample parameters, transform, optionally mirror, and solve the label.

    ``cam`` defaults to ``box.intrinsics()`` of the original (untransformed) box.
    """
    cam = box.intrinsics() if cam is None else cam
    return augment(sample_params(box, rng), box, lm, model, cam)


def worker_rng(seed, worker):
    """Independent stream for worker ``worker`` derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(worker)]))


def augment_stream(box, lm, count, seed, model, cam=None):
    """``count`` samples, each mirrored with probability 1/2."""
    rng = np.random.default_rng(seed)
    return [make_augmented_sample(box, lm, rng, model, cam) for _ in range(count)]


def augment_dataset(box, lm, count, seed, model, cam=None):
    """``count`` transforms, each emitted unmirrored and mirrored (2 * count samples)."""
    cam = box.intrinsics() if cam is None else cam
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        p = sample_params(box, rng)
        for flag in (False, True):
            q = AugmentationParams(p.dx, p.dy, p.scale, p.rotation, flag)
            out.append(augment(q, box, lm, model, cam))
    return out


def label_consistency(sample, model, cam):
    """Reprojection RMS of ``model`` at the sample's label against its landmarks."""
    return reprojection_rms(sample.transformed_landmarks, model, sample.pose_label, cam)
