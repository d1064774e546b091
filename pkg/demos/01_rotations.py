"""
Rotations, Euler angles and head poses
======================================

Axis-angle vectors, rotation matrices and (pitch, yaw, roll) triples describe
the same head orientation. This walks through the conversions.
"""

import math

import numpy as np

from facepose.geometry import Pose6DoF, matrix_to_euler, matrix_to_rodrigues, rodrigues_to_matrix

# A head turned 40 degrees toward its left, tilted down a little.
pose = Pose6DoF.from_euler(math.radians(-10), math.radians(40), math.radians(5), [0.0, 0.0, 4.0])
print("axis-angle:", np.round(pose.rotation, 4))
print("euler (deg):", np.round(pose.euler().degrees(), 3))

# Vector -> matrix -> vector is lossless away from a half turn.
R = rodrigues_to_matrix(pose.rotation)
print("round trip gap:", np.abs(matrix_to_rodrigues(R) - pose.rotation).max())

# At a half turn the axis sign is ambiguous; the canonical form picks one.
half = rodrigues_to_matrix([0.0, math.pi, 0.0])
print("half turn ->", np.round(matrix_to_rodrigues(half), 6))

# Yaw of +-90 degrees is gimbal lock: roll folds into pitch and is reported as 0.
locked = matrix_to_euler(Pose6DoF.from_euler(0.3, math.pi / 2, 0.2, [0, 0, 4]).matrix)
print("gimbal lock:", np.round(locked.degrees(), 3), "degenerate =", locked.degenerate)
