"""
Landmarks from pose, and how they are scored
============================================

Projecting the generic face at an estimated pose gives 68 landmarks for free.
They are scored by mean point error over the outer-eye distance, which has a
known bias: the eyes foreshorten as the head turns.
"""

import math

import numpy as np

from facepose.evaluation import aggregate, image_error
from facepose.geometry import CameraIntrinsics, Pose6DoF
from facepose.landmarks import generic_model, predict_landmarks

model = generic_model()
cam = CameraIntrinsics.for_crop(256)
rng = np.random.default_rng(3)

# The same pixel offsets at two yaws.
offsets = rng.normal(0, 2.0, (68, 2))
for yaw in (0, 30, 60):
    gt = predict_landmarks(Pose6DoF.from_euler(0, math.radians(yaw), 0, [0, 0, 4]), model, cam)
    e = image_error(gt.with_points(gt.points + offsets), gt)
    print(f"yaw {yaw:2d}: outer-eye distance {e.inter_ocular:6.2f} px, normalized error {e.error:.4f}")

# A small benchmark: pose estimates with growing error, scored with the metric.
errors = []
for _ in range(200):
    truth = Pose6DoF.from_euler(*np.radians(rng.uniform([-20, -60, -20], [20, 60, 20])), [0, 0, 3.5])
    guess = Pose6DoF(truth.rotation + rng.normal(0, 0.05, 3), truth.translation)
    gt = predict_landmarks(truth, model, cam)
    errors.append(image_error(predict_landmarks(guess, model, cam), gt))
rep = aggregate(errors)
print(f"MER {rep.mer:.4f}, <=5%: {rep.fractions[0.05]:.2f}, <=10%: {rep.fractions[0.10]:.2f}, AUC@0.1 {rep.auc:.3f}")
