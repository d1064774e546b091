"""
2D alignment and its dependence on yaw
======================================

Classic face alignment fits a similarity from a few facial points to a fixed
template. Which points are usable depends on how far the head is turned.
"""

import math

import numpy as np

from facepose.alignment2d import align_face, warp_points
from facepose.geometry import CameraIntrinsics, Pose6DoF
from facepose.landmarks import generic_model, predict_landmarks

model = generic_model()
cam = CameraIntrinsics.for_crop(256)

for yaw in (0, 25, 30, 31, 60, -60):
    pose = Pose6DoF.from_euler(0.0, math.radians(yaw), 0.0, [0.0, 0.0, 3.0])
    sim, roles = align_face(pose, model, cam, return_roles=True)
    print(f"yaw {yaw:4d}: {len(roles)} roles {roles}, scale {sim.scale:.3f}, "
          f"rotation {math.degrees(sim.rotation):6.2f} deg")

# Warping the full landmark set shows where a profile face lands in the crop.
pose = Pose6DoF.from_euler(0.0, math.radians(60), 0.0, [0.0, 0.0, 3.0])
warped = warp_points(align_face(pose, model, cam), predict_landmarks(pose, model, cam))
print("profile nose tip in template:", np.round(warped.points[30], 2))
