"""
Regressing pose directly from pixels
====================================

A small fully connected network maps a 32x32 raster of the face to the six
pose numbers. Training data is synthetic: random head poses passed through
the augmentation pipeline. This demo uses a reduced set so it runs in seconds.
"""

import math

import numpy as np

from facepose.geometry import rotation_angle
from facepose.landmarks import generic_model
from facepose.regressor import Hyperparams, loss_monotone, predict_pose, synthetic_views, train

model = generic_model()
X, P = synthetic_views(800, seed=1, model=model)
Xt, Pt = synthetic_views(100, seed=2, model=model)

net = train(X, P, Hyperparams(epochs=30, halve_every=10), seed=0)
print("loss by epoch:", np.round(net.history[::5], 4), "monotone:", loss_monotone(net.history))

errs = [math.degrees(rotation_angle(predict_pose(net, None, x).matrix, p.matrix)) for x, p in zip(Xt, Pt)]
print(f"test rotation error: median {np.median(errs):.2f} deg, 90th pct {np.percentile(errs, 90):.2f} deg")

# Coarse ASCII view of one raster.
img = Xt[0]
for row in img[::2]:
    print("".join(" .:-=+*#%@"[min(9, int(v * 10))] for v in row[::1]))
