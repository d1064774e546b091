"""Landmark error metric normalized by inter-ocular distance, and its statistics.

The per-image error is the mean point-to-point distance divided by the
ground-truth distance between the outer eye corners. Thresholds at 5, 10 and
20 percent are inclusive (``<=``); the 40 percent failure rate is strict (``>``).
"""

from dataclasses import dataclass, field
import io
import math

import numpy as np

from .errors import DegenerateGroundTruthError, EmptyInputError, SchemeError

THRESHOLDS = (0.05, 0.10, 0.20)
FAILURE_THRESHOLD = 0.40
DEFAULT_CUTOFF = 0.10


@dataclass(frozen=True)
class ImageError:
    error: float
    m: int
    inter_ocular: float


def image_error(pred, gt):
    """Normalized mean error of ``pred`` against ground truth ``gt``."""
    if pred.scheme != gt.scheme or len(pred) != len(gt):
        raise SchemeError(f"scheme mismatch: {pred.scheme!r}/{len(pred)} vs {gt.scheme!r}/{len(gt)}")
    d = float(np.linalg.norm(gt.role_point("left_eye_outer") - gt.role_point("right_eye_outer")))
    if not d > 0:
        raise DegenerateGroundTruthError("ground-truth outer eye corners coincide")
    m = len(gt)
    dist = np.linalg.norm(pred.points - gt.points, axis=1)
    return ImageError(float(dist.sum() / (m * d)), m, d)


@dataclass
class ErrorReport:
    errors: np.ndarray
    cutoff: float
    mer: float = 0.0
    fractions: dict = field(default_factory=dict)
    failure_rate: float = 0.0
    curve: np.ndarray = None
    auc: float = 0.0

    def cdf(self, x):
        """Fraction of images with error ``<= x``."""
        return float(np.count_nonzero(self.errors <= x)) / len(self.errors)

    def to_dict(self):
        return {
            "n": int(len(self.errors)),
            "mer": self.mer,
            "fractions": {f"{k:.2f}": v for k, v in self.fractions.items()},
            "failure_rate": self.failure_rate,
            "failure_threshold": FAILURE_THRESHOLD,
            "cutoff": self.cutoff,
            "auc": self.auc,
            "errors": self.errors.tolist(),
            "curve": self.curve.tolist(),
        }


def accumulative_curve(errors, cutoff):
    """Step CDF on ``[0, cutoff]`` as an ``(k, 2)`` polyline of (error, fraction).

    Each jump appears as two points at the same abscissa, so trapezoidal
    integration of the polyline is the exact area under the step function.
    """
    e = np.sort(np.asarray(errors, dtype=float))
    n = len(e)
    xs, ys = [0.0], [np.count_nonzero(e <= 0.0) / n]
    for x in np.unique(e[(e > 0) & (e <= cutoff)]):
        xs += [x, x]
        ys += [ys[-1], np.count_nonzero(e <= x) / n]
    xs.append(cutoff)
    ys.append(ys[-1])
    return np.column_stack([xs, ys])


def aggregate(errors, cutoff=DEFAULT_CUTOFF):
    """Summary statistics over per-image errors (``ImageError`` or floats)."""
    if not len(errors):
        raise EmptyInputError("no errors to aggregate")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    e = np.array([getattr(x, "error", x) for x in errors], dtype=float)
    rep = ErrorReport(errors=e, cutoff=float(cutoff))
    rep.mer = math.fsum(e) / len(e)
    rep.fractions = {t: rep.cdf(t) for t in THRESHOLDS}
    rep.failure_rate = float(np.count_nonzero(e > FAILURE_THRESHOLD)) / len(e)
    rep.curve = accumulative_curve(e, cutoff)
    x, y = rep.curve[:, 0], rep.curve[:, 1]
    rep.auc = float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)) / cutoff)
    return rep


def curve_csv(report):
    buf = io.StringIO()
    buf.write("error,fraction\n")
    for x, y in report.curve:
        buf.write(f"{x:.10g},{y:.10g}\n")
    return buf.getvalue()


def curves_svg(curves, width=480, height=360, title="Accumulative error curve"):
    """Plain SVG polylines for ``{label: (k, 2) curve}`` sharing one axis range."""
    colors = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
    pad = 48
    xmax = max(float(c[:, 0].max()) for c in curves.values()) or 1.0
    pw, ph = width - 2 * pad, height - 2 * pad

    def sx(v):
        return pad + pw * v / xmax

    def sy(v):
        return height - pad - ph * v

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{pad}" y1="{sy(0)}" x2="{width - pad}" y2="{sy(0)}" stroke="black"/>',
           f'<line x1="{pad}" y1="{sy(0)}" x2="{pad}" y2="{sy(1)}" stroke="black"/>']
    for k in range(5):
        v = xmax * k / 4
        out.append(f'<text x="{sx(v):.1f}" y="{sy(0) + 16:.1f}" text-anchor="middle" font-size="10">{v:.3g}</text>')
        f = k / 4
        out.append(f'<text x="{pad - 6}" y="{sy(f) + 3:.1f}" text-anchor="end" font-size="10">{f:.2f}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">'
               'normalized error</text>')
    for i, (label, c) in enumerate(curves.items()):
        color = colors[i % len(colors)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in c)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 4}" y="{sy(0.1 + 0.07 * i):.1f}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
