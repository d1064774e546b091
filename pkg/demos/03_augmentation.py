"""
Augmenting a training face
==========================

One annotated face becomes many training samples: shift, scale, rotate and
maybe mirror the box and landmarks, then solve the pose label again so it
matches what the moved landmarks show.
"""

import numpy as np

from facepose.augmentation import AugmentationParams, BoundingBox, augment, augment_stream
from facepose.geometry import Pose6DoF
from facepose.landmarks import generic_model, predict_landmarks

model = generic_model()
box = BoundingBox(40.0, 30.0, 200.0, 200.0)
cam = box.intrinsics()
pose = Pose6DoF.from_euler(0.1, 0.3, 0.05, [0.0, 0.0, 5.0])
lm = predict_landmarks(pose, model, cam)
print("original euler (deg):", np.round(pose.euler().degrees(), 2))

# An in-plane rotation of the crop shows up as the same change in roll.
s = augment(AugmentationParams(rotation=25.0), box, lm, model, cam)
print("rotated 25 deg      :", np.round(s.pose_label.euler().degrees(), 2))

# Mirroring flips yaw and roll.
s = augment(AugmentationParams(mirrored=True), box, lm, model, cam)
print("mirrored            :", np.round(s.pose_label.euler().degrees(), 2))

# Random samples; the residual column shows how well one rigid pose explains
# the moved landmarks (translation and scale are not exact under perspective).
for s in augment_stream(box, lm, 6, seed=1, model=model):
    p = s.params
    print(f"dx {p.dx:6.1f} dy {p.dy:6.1f} s {p.scale:4.2f} rot {p.rotation:6.1f} mirror {p.mirrored!s:5}"
          f" -> euler {np.round(s.pose_label.euler().degrees(), 1)}, rms {s.reprojection_rms:.2f} px")
