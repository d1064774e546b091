"""Direct 6DoF regression from image intensities, at desk scale.

Inputs are synthetic rasters: the generic model's landmarks splatted as small
Gaussians and shaded by depth. The regressor is a fully connected ReLU network
trained with mini-batch SGD + momentum on per-dimension standardized labels.
"""

from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

from .augmentation import BoundingBox, make_augmented_sample
from .errors import DivergenceError, EmptyInputError
from .geometry import CameraIntrinsics, Pose6DoF, project_array
from .landmarks import predict_landmarks

MODEL_FORMAT = "facepose-regressor"
MODEL_VERSION = 1
STD_FLOOR = 1e-9


# -- rasters ---------------------------------------------------------------

def rasterize(pose, model, cam, side=32, sigma=None):
    """Render landmarks as depth-shaded Gaussian dots on a ``side x side`` grid.

    Pixel ``(row, col)`` samples the image at ``(x=col, y=row)``. Brightness of
    a point is ``0.5 * exp(-1.5 * (Z - t_z))`` so parts nearer than the head
    center are brighter. Values are clamped to ``[0, 1]``.
    """
    P = getattr(model, "points", model)
    uv, depth = project_array(P, pose, cam)
    sigma = 0.04 * side if sigma is None else sigma
    b = 0.5 * np.exp(-1.5 * (depth - pose.translation[2]))
    grid = np.arange(side, dtype=float)
    gx = np.exp(-0.5 * ((grid[None, :] - uv[:, [0]]) / sigma) ** 2)
    gy = np.exp(-0.5 * ((grid[None, :] - uv[:, [1]]) / sigma) ** 2)
    img = gy.T @ (b[:, None] * gx)
    return np.clip(img, 0.0, 1.0)


def write_pgm(path, raster):
    img = np.clip(np.rint(np.asarray(raster) * 255.0), 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    """Read binary (P5) or ASCII (P2) 8-bit PGM into floats in ``[0, 1]``."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos)
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == "P5":
        img = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
    elif magic == "P2":
        img = np.array(data[pos:].split()[: w * h], dtype=float)
    else:
        raise ValueError(f"unsupported PGM type {magic!r}")
    return img.reshape(h, w).astype(float) / maxval


def write_raster_csv(path, raster):
    np.savetxt(path, np.asarray(raster), delimiter=",", fmt="%.17g")


def read_raster_csv(path):
    return np.clip(np.loadtxt(path, delimiter=",", ndmin=2), 0.0, 1.0)


def read_raster(path):
    return read_raster_csv(path) if str(path).endswith(".csv") else read_pgm(path)


# -- label normalization ---------------------------------------------------

@dataclass(eq=False)
class LabelNormalizer:
    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = None

    def normalize(self, h):
        return (np.asarray(h, dtype=float) - self.mean) / self.std

    def denormalize(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "degenerate": self.degenerate.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"]), np.array(d["std"]), np.array(d["degenerate"], dtype=bool))


def fit_normalizer(labels):
    """Per-dimension mean and population std; std floored at ``1e-9``."""
    H = np.array([p.as_vector() if isinstance(p, Pose6DoF) else p for p in labels], dtype=float)
    if len(H) < 2:
        raise EmptyInputError("need at least two labels to fit a normalizer")
    mean = H.mean(axis=0)
    std = H.std(axis=0)
    degenerate = std < STD_FLOOR
    return LabelNormalizer(mean, np.where(degenerate, STD_FLOOR, std), degenerate)


# -- network ----------------------------------------------------------------

@dataclass
class Hyperparams:
    hidden: tuple = (256, 64)
    learning_rate: float = 1e-2
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 100
    halve_every: int | None = 20
    tol: float | None = None


@dataclass(eq=False)
class RegressorModel:
    weights: list
    biases: list
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    normalizer: LabelNormalizer | None = None
    history: list = field(default_factory=list)
    steps: int = 0

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    def params(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out


def init_model(input_dim, hyperparams=None, seed=0):
    """Glorot-uniform weights, zero biases."""
    hp = Hyperparams() if hyperparams is None else hyperparams
    rng = np.random.default_rng(seed)
    sizes = [input_dim, *hp.hidden, 6]
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        Ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return RegressorModel(Ws, bs, hp)


def forward(model, x, cache=False):
    """Normalized 6-vector(s) for one raster or a batch ``(n, side, side)``."""
    x = np.asarray(x, dtype=float)
    d = model.weights[0].shape[0]
    single = x.ndim == 2 and x.size == d and x.shape[1] != d
    a = x.reshape(1 if single else len(x), -1)
    acts = [a]
    L = len(model.weights)
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W + b
        a = np.maximum(z, 0.0) if k < L - 1 else z
        acts.append(a)
    if cache:
        return a, acts
    return a[0] if single else a


def loss_and_grads(model, X, Y):
    """Mean squared error over all outputs and its gradients (manual backprop)."""
    out, acts = forward(model, X, cache=True)
    diff = out - Y
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    gW, gb = [None] * len(model.weights), [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        gW[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k].T) * (acts[k] > 0)
    return loss, gW, gb


def dataset_loss(model, X, Y, chunk=1024):
    total = 0.0
    for i in range(0, len(X), chunk):
        d = forward(model, X[i:i + chunk], cache=True)[0] - Y[i:i + chunk]
        total += float((d * d).sum())
    return total / Y.size


def train(rasters, poses, hyperparams=None, seed=0, normalizer=None):
    """Fit a regressor to ``(raster, pose)`` pairs.

    Returns a :class:`RegressorModel` carrying its label normalizer and the
    per-epoch training loss in ``history``. A non-finite loss raises
    :class:`DivergenceError`.
    """
    hp = Hyperparams() if hyperparams is None else hyperparams
    if len(rasters) == 0:
        raise EmptyInputError("empty training set")
    X = np.asarray(rasters, dtype=float).reshape(len(rasters), -1)
    H = np.array([p.as_vector() if isinstance(p, Pose6DoF) else p for p in poses], dtype=float)
    if normalizer is None:
        if len(H) > 1:
            normalizer = fit_normalizer(H)
        else:
            normalizer = LabelNormalizer(np.zeros(6), np.ones(6), np.ones(6, bool))
    Y = normalizer.normalize(H)

    rng = np.random.default_rng(seed)
    model = init_model(X.shape[1], hp, seed=rng.integers(2**32))
    model.normalizer = normalizer
    vel = [np.zeros_like(p) for p in model.params()]
    bs = min(hp.batch_size, len(X))
    lr = hp.learning_rate
    for epoch in range(hp.epochs):
        if hp.halve_every and epoch and epoch % hp.halve_every == 0:
            lr *= 0.5
        order = rng.permutation(len(X))
        for i in range(0, len(X), bs):
            idx = order[i:i + bs]
            loss, gW, gb = loss_and_grads(model, X[idx], Y[idx])
            if not math.isfinite(loss):
                raise DivergenceError(epoch, loss)
            grads = [g for pair in zip(gW, gb) for g in pair]
            for p, v, g in zip(model.params(), vel, grads):
                v *= hp.momentum
                v -= lr * g
                p += v
            model.steps += 1
        epoch_loss = dataset_loss(model, X, Y)
        if not math.isfinite(epoch_loss):
            raise DivergenceError(epoch, epoch_loss)
        model.history.append(epoch_loss)
        if hp.tol is not None and epoch_loss < hp.tol:
            break
    return model


def loss_monotone(history):
    """True when the per-epoch loss never increases."""
    return all(b <= a for a, b in zip(history, history[1:]))


def predict_pose(model, normalizer, x):
    normalizer = model.normalizer if normalizer is None else normalizer
    return Pose6DoF.from_vector(normalizer.denormalize(forward(model, x)))


def save_model(path, model):
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "sizes": model.sizes,
        "activation": "relu",
        "hyperparams": asdict(model.hyperparams),
        "normalizer": model.normalizer.to_dict() if model.normalizer else None,
        "history": model.history,
        "steps": model.steps,
    }
    arrays = {f"W{k}": W for k, W in enumerate(model.weights)}
    arrays.update({f"b{k}": b for k, b in enumerate(model.biases)})
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("format") != MODEL_FORMAT or meta.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: not a version {MODEL_VERSION} regressor file")
        n = len(meta["sizes"]) - 1
        Ws = [z[f"W{k}"].copy() for k in range(n)]
        bs = [z[f"b{k}"].copy() for k in range(n)]
    hp = meta["hyperparams"]
    hp["hidden"] = tuple(hp["hidden"])
    norm = LabelNormalizer.from_dict(meta["normalizer"]) if meta["normalizer"] else None
    return RegressorModel(Ws, bs, Hyperparams(**hp), norm, meta["history"], meta["steps"])


# -- synthetic data ---------------------------------------------------------

BASE_DEPTH = 3.0


def sample_head_pose(rng, yaw_deg=75.0, pitch_deg=25.0, depth=BASE_DEPTH):
    """Uniform yaw/pitch about a centered head at ``depth`` model units."""
    yaw = math.radians(rng.uniform(-yaw_deg, yaw_deg))
    pitch = math.radians(rng.uniform(-pitch_deg, pitch_deg))
    return Pose6DoF.from_euler(pitch, yaw, 0.0, [0.0, 0.0, depth])


def synthetic_views(n, seed, model, side=32, yaw_deg=75.0, pitch_deg=25.0):
    """Rasters and labels built the way training data is.

    Each view projects the model at a random yaw/pitch, runs the landmarks
    through the augmentation pipeline (random in-plane transform, mirror,
    PnP label) and rasterizes the model at the resulting label.
    """
    rng = np.random.default_rng(seed)
    cam = CameraIntrinsics.for_crop(side)
    box = BoundingBox.for_crop(side)
    rasters = np.empty((n, side, side))
    labels = []
    for i in range(n):
        lm = predict_landmarks(sample_head_pose(rng, yaw_deg, pitch_deg), model, cam)
        s = make_augmented_sample(box, lm, rng, model, cam)
        rasters[i] = rasterize(s.pose_label, model, cam, side)
        labels.append(s.pose_label)
    return rasters, labels
