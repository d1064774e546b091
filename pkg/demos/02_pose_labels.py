"""
Pose labels from landmarks
==========================

A 6DoF label is the pose that best projects a generic 3D face onto detected
2D landmarks. Here the landmarks come from a known pose plus pixel noise, so
the recovered label can be compared against the truth.
"""

import math

import numpy as np

from facepose.geometry import CameraIntrinsics, Pose6DoF, rotation_angle
from facepose.landmarks import generic_model, predict_landmarks
from facepose.pnp import synthesize_pose_label

model = generic_model()
cam = CameraIntrinsics.for_crop(256)
rng = np.random.default_rng(0)

truth = Pose6DoF.from_euler(math.radians(8), math.radians(-35), math.radians(12), [0.05, -0.02, 2.5])
clean = predict_landmarks(truth, model, cam)

for sigma in (0.0, 0.5, 2.0, 5.0):
    noisy = clean.with_points(clean.points + rng.normal(0, sigma, clean.points.shape))
    res = synthesize_pose_label(noisy, model, cam, return_result=True)
    err = math.degrees(rotation_angle(res.pose.matrix, truth.matrix))
    print(f"noise {sigma:3.1f} px: rotation error {err:6.3f} deg, rms {res.rms_reprojection_error:.3f} px, "
          f"{res.iterations} LM iterations")

# Landmarks flagged invisible get zero weight and do not pull the solution.
vis = np.ones(68, bool)
vis[:9] = False
shifted = clean.points.copy()
shifted[:9] += 30.0
label = synthesize_pose_label(clean.with_points(shifted, visibility=vis), model, cam)
print("with hidden outliers:", math.degrees(rotation_angle(label.matrix, truth.matrix)), "deg")
