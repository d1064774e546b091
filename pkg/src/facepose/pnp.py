"""Pose recovery from 2D-3D landmark correspondences.

A direct linear transform (DLT) gives the starting pose, which is refined by
Levenberg-Marquardt on the weighted reprojection error with analytic Jacobians.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    ProjectionError,
    SchemeError,
    TooFewCorrespondencesError,
)
from .geometry import (
    Pose6DoF,
    canonical_rotvec,
    matrix_to_rodrigues,
    rodrigues_jacobian,
    rodrigues_to_matrix,
)

MIN_POINTS = 4
MIN_DLT_POINTS = 6


@dataclass(frozen=True, eq=False)
class Correspondences:
    object_points: np.ndarray
    image_points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        X = np.asarray(self.object_points, dtype=float).reshape(-1, 3)
        x = np.asarray(self.image_points, dtype=float).reshape(-1, 2)
        if len(X) != len(x):
            raise SchemeError("object and image point counts differ")
        w = np.ones(len(X)) if self.weights is None else np.asarray(self.weights, dtype=float).reshape(len(X))
        if not np.all(np.isfinite(w)) or (w < 0).any():
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "object_points", X)
        object.__setattr__(self, "image_points", x)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def from_landmarks(cls, lm2d, model):
        if lm2d.scheme != model.scheme or len(lm2d) != len(model):
            raise SchemeError(f"scheme mismatch: {lm2d.scheme!r} vs {model.scheme!r}")
        w = None if lm2d.visibility is None else lm2d.visibility.astype(float)
        return cls(model.points, lm2d.points, w)

    def to_dict(self):
        return {
            "model": {"scheme": "free", "points": self.object_points.tolist()},
            "image": {"scheme": "free", "points": self.image_points.tolist()},
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        """Accepts landmark-set objects or bare point arrays for both sides."""
        pts = lambda v: v["points"] if isinstance(v, dict) else v
        return cls(pts(d["model"]), pts(d["image"]), d.get("weights"))


@dataclass
class PnPResult:
    pose: Pose6DoF
    rms_reprojection_error: float
    iterations: int
    converged: bool
    gradient_norm: float = np.inf
    initial_rms: float = np.inf
    cost_history: list = field(default_factory=list)


def reprojection(x, X, cam):
    """Projected pixels and their ``(n, 2, 6)`` Jacobian w.r.t. ``(r, t)``."""
    r, t = x[:3], x[3:]
    R = rodrigues_to_matrix(r)
    Xc = X @ R.T + t
    Z = Xc[:, 2]
    bad = np.flatnonzero(~(Z > 0))
    if bad.size:
        raise ProjectionError(bad[0], Z[bad[0]])
    f = cam.focal
    cx, cy = cam.principal_point
    iz = 1.0 / Z
    uv = np.column_stack([f * Xc[:, 0] * iz + cx, f * Xc[:, 1] * iz + cy])

    # d(u, v)/d(camera point), shape (n, 2, 3)
    dproj = np.zeros((len(X), 2, 3))
    dproj[:, 0, 0] = f * iz
    dproj[:, 1, 1] = f * iz
    dproj[:, 0, 2] = -f * Xc[:, 0] * iz * iz
    dproj[:, 1, 2] = -f * Xc[:, 1] * iz * iz

    dR = rodrigues_jacobian(r)
    dXc_dr = np.einsum("kab,nb->nak", dR, X)  # (n, 3, 3): column k is dXc/dr_k
    J = np.empty((len(X), 2, 6))
    J[:, :, :3] = dproj @ dXc_dr
    J[:, :, 3:] = dproj
    return uv, J


def weighted_system(x, c, cam):
    """Stacked weighted residual vector and Jacobian at parameters ``x``."""
    uv, J = reprojection(x, c.object_points, cam)
    sw = np.sqrt(c.weights)
    res = ((uv - c.image_points) * sw[:, None]).ravel()
    J = (J * sw[:, None, None]).reshape(-1, 6)
    return res, J


def normal_equations(pose, c, cam):
    """Gauss-Newton normal equations ``(J^T W J, J^T W r)`` at ``pose``."""
    res, J = weighted_system(pose.as_vector(), c, cam)
    return J.T @ J, J.T @ res


def _active(c):
    keep = c.weights > 0
    n = int(keep.sum())
    if n < MIN_POINTS:
        raise TooFewCorrespondencesError(f"need at least {MIN_POINTS} weighted correspondences, got {n}")
    X = c.object_points[keep]
    s = np.linalg.svd(X - X.mean(axis=0), compute_uv=False)
    if s[0] == 0 or s[1] <= 1e-9 * s[0]:
        raise DegenerateConfigurationError("3D points are collinear")
    return keep


def _normalizer(P):
    """Similarity taking points to zero mean and RMS norm sqrt(dim)."""
    d = P.shape[1]
    mu = P.mean(axis=0)
    s = np.sqrt(d) / np.sqrt(((P - mu) ** 2).sum(axis=1).mean())
    T = np.eye(d + 1)
    T[:d, :d] *= s
    T[:d, d] = -s * mu
    return T


def dlt_pose(X, x, cam, w=None):
    """Linear pose estimate from >= 6 points, or ``None`` if the system is degenerate."""
    n = len(X)
    w = np.ones(n) if w is None else w
    f = cam.focal
    cx, cy = cam.principal_point
    xn = np.column_stack([(x[:, 0] - cx) / f, (x[:, 1] - cy) / f])
    T2 = _normalizer(xn)
    T3 = _normalizer(X)
    xh = np.column_stack([xn, np.ones(n)]) @ T2.T
    Xh = np.column_stack([X, np.ones(n)]) @ T3.T
    A = np.zeros((2 * n, 12))
    A[0::2, 0:4] = Xh
    A[0::2, 8:12] = -xh[:, [0]] * Xh
    A[1::2, 4:8] = Xh
    A[1::2, 8:12] = -xh[:, [1]] * Xh
    A *= np.repeat(np.sqrt(w), 2)[:, None]
    _, s, Vt = np.linalg.svd(A)
    if s[-2] <= 1e-10 * s[0]:
        return None
    P = np.linalg.solve(T2, Vt[-1].reshape(3, 4)) @ T3
    M = P[:, :3]
    if np.linalg.det(M) < 0:
        P = -P
        M = -M
    U, S, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        return None
    t = P[:, 3] / S.mean()
    return Pose6DoF(matrix_to_rodrigues(R), t)


def frontal_prior(X, x, cam):
    """Zero rotation, depth matched to the observed spread of the points."""
    f = cam.focal
    cx, cy = cam.principal_point
    spread3 = np.sqrt(((X[:, :2] - X[:, :2].mean(axis=0)) ** 2).sum(axis=1).mean())
    spread2 = np.sqrt(((x - x.mean(axis=0)) ** 2).sum(axis=1).mean())
    tz = f * spread3 / max(spread2, 1e-12) - X[:, 2].mean()
    tz = max(tz, 1e-3 + (-X[:, 2]).max())
    mx, my = x.mean(axis=0)
    depth = tz + X[:, 2].mean()
    tx = (mx - cx) / f * depth - X[:, 0].mean()
    ty = (my - cy) / f * depth - X[:, 1].mean()
    return Pose6DoF(np.zeros(3), [tx, ty, tz])


def initial_pose(c, cam):
    keep = _active(c)
    X, x, w = c.object_points[keep], c.image_points[keep], c.weights[keep]
    pose = None
    if len(X) >= MIN_DLT_POINTS:
        pose = dlt_pose(X, x, cam, w)
        if pose is not None and not ((X @ pose.matrix.T + pose.translation)[:, 2] > 0).all():
            pose = None
    return pose if pose is not None else frontal_prior(X, x, cam)


def solve_pnp(c, cam, init=None, max_iter=100, gtol=1e-10, xtol=1e-12, lam0=1e-3):
    """Weighted least-squares PnP.

    Damping starts at ``lam0``, is multiplied by 10 after a rejected step and
    divided by 10 after an accepted one. Iteration stops when the gradient
    infinity-norm falls below ``gtol``, the step norm below ``xtol``, or after
    ``max_iter`` trial steps; the last case returns the best iterate with
    ``converged=False``.
    """
    _active(c)
    pose0 = initial_pose(c, cam) if init is None else init
    x = pose0.as_vector()
    res, J = weighted_system(x, c, cam)
    wsum = c.weights.sum()
    cost = float(res @ res)
    history = [cost]
    initial_rms = np.sqrt(cost / wsum)
    lam = lam0
    converged = False
    it = 0
    g = J.T @ res
    while it < max_iter:
        g = J.T @ res
        if np.abs(g).max() < gtol:
            converged = True
            break
        H = J.T @ J
        D = np.maximum(np.diag(H), 1e-12 * max(np.diag(H).max(), 1.0))
        try:
            step = np.linalg.solve(H + lam * np.diag(D), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            it += 1
            continue
        it += 1
        if np.linalg.norm(step) < xtol:
            converged = True
            break
        x_new = x + step
        try:
            res_new, J_new = weighted_system(x_new, c, cam)
            cost_new = float(res_new @ res_new)
        except ProjectionError:
            cost_new = np.inf
        if cost_new < cost:
            x, res, J, cost = x_new, res_new, J_new, cost_new
            history.append(cost)
            lam = max(lam / 10.0, 1e-15)
        else:
            lam *= 10.0
            if lam > 1e16:
                converged = np.abs(J.T @ res).max() < np.sqrt(gtol)
                break
    g = J.T @ res
    pose = Pose6DoF(canonical_rotvec(x[:3]), x[3:])
    return PnPResult(
        pose=pose,
        rms_reprojection_error=float(np.sqrt(cost / wsum)),
        iterations=it,
        converged=converged,
        gradient_norm=float(np.abs(g).max()),
        initial_rms=float(initial_rms),
        cost_history=history,
    )


def synthesize_pose_label(landmarks2d, model, cam, return_result=False):
    """6DoF label from detected 2D landmarks; invisible points get weight 0."""
    model = getattr(model, "landmarks", model)
    c = Correspondences.from_landmarks(landmarks2d, model)
    result = solve_pnp(c, cam)
    return result if return_result else result.pose


def reprojection_rms(landmarks2d, model, pose, cam):
    """Weighted RMS pixel error of ``model`` projected at ``pose`` against ``landmarks2d``."""
    model = getattr(model, "landmarks", model)
    c = Correspondences.from_landmarks(landmarks2d, model)
    res, _ = weighted_system(pose.as_vector(), c, cam)
    return float(np.sqrt(res @ res / c.weights.sum()))

