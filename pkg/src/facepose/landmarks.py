"""Landmark prediction by projecting a fixed, generic 3D face model.

The shipped model is procedurally generated: a bilaterally symmetric set of 68
points with rough adult proportions, scaled so the outer eye corners are 1.0
model units apart. It carries no third-party data.
"""

from dataclasses import dataclass
from importlib import resources
import json

import numpy as np

from .geometry import LandmarkSet3D, project_points
from .schemes import IBUG68

MODEL_FILE = "generic_model_68.json"

# Subject's right half and midline, in camera-aligned model axes
# (x image-right, y down, z away from the camera; nose tip has negative z).
# The left half is the mirror image under IBUG68.mirror.
_HALF = {
    # jaw, ear to chin
    0: (-0.74, 0.02, 0.68), 1: (-0.73, 0.20, 0.63), 2: (-0.70, 0.37, 0.56),
    3: (-0.65, 0.53, 0.47), 4: (-0.57, 0.67, 0.37), 5: (-0.46, 0.79, 0.27),
    6: (-0.33, 0.88, 0.18), 7: (-0.17, 0.94, 0.11), 8: (0.0, 0.96, 0.08),
    # right brow, outer to inner
    17: (-0.64, -0.22, 0.10), 18: (-0.52, -0.30, 0.01), 19: (-0.38, -0.33, -0.05),
    20: (-0.25, -0.31, -0.08), 21: (-0.12, -0.26, -0.09),
    # nose bridge down to the tip
    27: (0.0, -0.10, -0.10), 28: (0.0, 0.05, -0.19), 29: (0.0, 0.19, -0.29), 30: (0.0, 0.33, -0.40),
    # nostrils
    31: (-0.17, 0.43, -0.16), 32: (-0.09, 0.46, -0.22), 33: (0.0, 0.48, -0.26),
    # right eye, clockwise from the outer corner
    36: (-0.50, 0.0, 0.05), 37: (-0.40, -0.06, -0.01), 38: (-0.27, -0.06, -0.02),
    39: (-0.17, 0.0, 0.01), 40: (-0.27, 0.05, -0.01), 41: (-0.40, 0.05, 0.0),
    # outer lip
    48: (-0.30, 0.68, -0.02), 49: (-0.20, 0.63, -0.10), 50: (-0.08, 0.60, -0.15),
    51: (0.0, 0.62, -0.16), 59: (-0.20, 0.76, -0.09), 58: (-0.08, 0.80, -0.13),
    57: (0.0, 0.81, -0.14),
    # inner lip
    60: (-0.24, 0.68, -0.06), 61: (-0.08, 0.66, -0.12), 62: (0.0, 0.665, -0.13),
    67: (-0.08, 0.71, -0.12), 66: (0.0, 0.715, -0.13),
}


def make_symmetric_model():
    """Build the 68-point bilaterally symmetric face as an ``(68, 3)`` array."""
    pts = np.full((68, 3), np.nan)
    for i, p in _HALF.items():
        pts[i] = p
        j = IBUG68.mirror[i]
        pts[j] = (-p[0], p[1], p[2])
    assert not np.isnan(pts).any()
    # Pin the outer-corner distance to exactly 1.
    d = np.linalg.norm(pts[45] - pts[36])
    return pts / d


@dataclass(frozen=True, eq=False)
class GenericModel:
    landmarks: LandmarkSet3D
    provenance: str = ""

    @property
    def points(self):
        return self.landmarks.points

    def inter_ocular(self):
        return float(np.linalg.norm(self.landmarks.role_point("left_eye_outer")
                                    - self.landmarks.role_point("right_eye_outer")))

    def to_dict(self):
        d = self.landmarks.to_dict()
        d["provenance"] = self.provenance
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(LandmarkSet3D.from_dict(d), d.get("provenance", ""))


def load_model(path=None):
    """Load a model file (LandmarkSet3D JSON); the packaged model by default."""
    if path is None:
        text = resources.files("facepose.data").joinpath(MODEL_FILE).read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return GenericModel.from_dict(json.loads(text))


def generic_model():
    return load_model()


def predict_landmarks(pose, model, cam):
    """Project the model's 68 points through ``pose``; no shape adaptation."""
    lm = model.landmarks if isinstance(model, GenericModel) else model
    return project_points(lm, pose, cam)
