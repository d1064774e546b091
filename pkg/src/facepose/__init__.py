"""Geometric core of landmark-free face alignment.

6DoF head-pose representation, PnP pose-label synthesis, label-consistent
augmentation, 2D similarity alignment, landmark prediction from pose, landmark
error metrics and a small direct pose regressor.
"""

__version__ = "0.1.0"
