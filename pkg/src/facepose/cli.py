"""Command line entry point: ``facepose <subcommand> ...``.

Outputs are JSON documents (or JSONL streams whose first line is a metadata
header). Failures print a JSON error object to stderr and exit with 1 for data
errors or 2 for usage errors.
"""

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alignment2d import ReferenceTemplate, align_face
from .augmentation import BoundingBox, augment_dataset, augment_stream
from .errors import FacePoseError
from .evaluation import aggregate, curve_csv, curves_svg, image_error
from .geometry import CameraIntrinsics, LandmarkSet2D, Pose6DoF, rotation_angle
from .landmarks import load_model, predict_landmarks
from .pnp import Correspondences, solve_pnp
from . import regressor

EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- io helpers -------------------------------------------------------------

# Where results are written does not change them, so it stays out of the hash.
_UNHASHED = {"func", "out", "summary"}


def _meta(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()
    return {"tool": "facepose", "version": __version__, "command": args.command,
            "seed": getattr(args, "seed", None), "config_hash": digest[:16]}


def _dumps(obj):
    return json.dumps(obj, sort_keys=True)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            fh.write(text)


def _emit_doc(args, doc, out=None):
    doc = {"meta": _meta(args), **doc}
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out if out is None else out)


def _emit_jsonl(args, records, out=None):
    lines = [_dumps({"meta": _meta(args)})] + [_dumps(r) for r in records]
    _emit("\n".join(lines) + "\n", args.out if out is None else out)


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_records(path):
    """Records of a JSONL stream (metadata header skipped) or a single JSON doc.

    Returns ``(records, is_stream)``.
    """
    path = str(path)
    if path.endswith(".jsonl"):
        with open(path) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return [r for r in recs if set(r) != {"meta"}], True
    return [_read_json(path)], False


def _landmarks_of(rec):
    return LandmarkSet2D.from_dict(rec.get("landmarks", rec))


def _pose_of(rec):
    return Pose6DoF.from_dict(rec.get("pose", rec))


def read_landmark_collection(path):
    """``{key: LandmarkSet2D}`` from a directory of JSON files or a JSONL stream."""
    p = Path(path)
    if p.is_dir():
        out = {}
        for f in sorted(p.glob("*.json")):
            out[f.stem] = _landmarks_of(_read_json(f))
        return out
    recs, stream = read_records(p)
    if not stream:
        return {p.stem: _landmarks_of(recs[0])}
    return {str(r["id"]): _landmarks_of(r) for r in recs}


def _cam(args):
    return CameraIntrinsics.for_crop(args.crop_size)


def _seed(args):
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**32))
    return args.seed


# -- subcommands ------------------------------------------------------------

def cmd_synth(args):
    """Random head poses and their exact 68-point projections."""
    rng = np.random.default_rng(_seed(args))
    model = load_model(args.model)
    cam = _cam(args)
    records = []
    for i in range(args.poses):
        yaw, pitch, roll = np.radians(rng.uniform([-75, -25, -30], [75, 25, 30]))
        t = rng.uniform([-0.2, -0.2, 2.5], [0.2, 0.2, 4.0])
        pose = Pose6DoF.from_euler(pitch, yaw, roll, t)
        lm = predict_landmarks(pose, model, cam)
        rid = f"{i:06d}"
        records.append({"id": rid, "pose": pose.to_dict(), "landmarks": lm.to_dict()})
        if args.rasters:
            os.makedirs(args.rasters, exist_ok=True)
            side = args.raster_side
            img = regressor.rasterize(pose, model, CameraIntrinsics.for_crop(side), side)
            regressor.write_pgm(Path(args.rasters) / f"{rid}.pgm", img)
    _emit_jsonl(args, records)


def cmd_solve_pose(args):
    model = load_model(args.model)
    cam = _cam(args)
    if args.correspondences:
        c = Correspondences.from_dict(_read_json(args.correspondences))
        recs, stream = [None], False
    else:
        recs, stream = read_records(args.landmarks)
    out = []
    for rec in recs:
        if rec is not None:
            c = Correspondences.from_landmarks(_landmarks_of(rec), model.landmarks)
        res = solve_pnp(c, cam)
        doc = {"pose": res.pose.to_dict(), "rms_reprojection_error": res.rms_reprojection_error,
               "iterations": res.iterations, "converged": res.converged}
        if stream:
            doc = {"id": rec["id"], **doc}
        out.append(doc)
    if stream:
        _emit_jsonl(args, out)
    else:
        _emit_doc(args, out[0])


def cmd_predict_landmarks(args):
    model = load_model(args.model)
    cam = _cam(args)
    recs, stream = read_records(args.pose)
    out = []
    for rec in recs:
        lm = predict_landmarks(_pose_of(rec), model, cam)
        out.append({"id": rec["id"], "landmarks": lm.to_dict()} if stream else {"landmarks": lm.to_dict()})
    if stream:
        _emit_jsonl(args, out)
    elif args.format == "csv":
        rows = ["x,y"] + [f"{x:.10g},{y:.10g}" for x, y in out[0]["landmarks"]["points"]]
        _emit("\n".join(rows) + "\n", args.out)
    else:
        _emit_doc(args, out[0])


def cmd_align(args):
    model = load_model(args.model)
    cam = _cam(args)
    tpl = ReferenceTemplate.load(args.template) if args.template else ReferenceTemplate(args.crop_size)
    sim, roles = align_face(_pose_of(_read_json(args.pose)), model, cam, tpl, return_roles=True)
    _emit_doc(args, {**sim.to_dict(), "roles": roles, "template": tpl.to_dict()})


def _parse_box(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--box expects x,y,w,h, got {text!r}") from None
    if len(vals) != 4:
        raise UsageError(f"--box expects x,y,w,h, got {text!r}")
    return BoundingBox(*vals)


def cmd_augment(args):
    box = _parse_box(args.box)
    model = load_model(args.model)
    lm = _landmarks_of(read_records(args.landmarks)[0][0])
    seed = _seed(args)
    make = augment_dataset if args.mode == "paired" else augment_stream
    samples = make(box, lm, args.count, seed, model.landmarks)
    out = args.out or "."
    records = [{"id": f"{i:06d}", **s.to_dict()} for i, s in enumerate(samples)]
    _emit_jsonl(args, records, out=str(Path(out) / "samples.jsonl"))


def cmd_train(args):
    seed = _seed(args)
    model = load_model(args.model)
    hidden = tuple(int(h) for h in args.hidden.split(",")) if args.hidden else ()
    hp = regressor.Hyperparams(hidden=hidden, epochs=args.epochs, batch_size=args.batch_size,
                               learning_rate=args.learning_rate)
    X, Y = regressor.synthetic_views(args.n_train, seed, model, side=args.side)
    net = regressor.train(X, Y, hp, seed=seed)
    out = args.out or "model.npz"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    regressor.save_model(out, net)
    doc = {"model_path": str(out), "epochs": len(net.history), "steps": net.steps,
           "final_loss": net.history[-1], "loss_monotone": regressor.loss_monotone(net.history)}
    if args.n_test:
        Xt, Yt = regressor.synthetic_views(args.n_test, seed + 1, model, side=args.side)
        errs = [math.degrees(rotation_angle(regressor.predict_pose(net, None, x).matrix, y.matrix))
                for x, y in zip(Xt, Yt)]
        doc["test_median_rotation_error_deg"] = float(np.median(errs))
    _emit_doc(args, doc, out=args.summary)


def cmd_infer(args):
    net = regressor.load_model(args.model)
    raster = regressor.read_raster(args.raster)
    pose = regressor.predict_pose(net, None, raster)
    _emit_doc(args, {"pose": pose.to_dict()})


def cmd_eval(args):
    pred = read_landmark_collection(args.pred)
    gt = read_landmark_collection(args.gt)
    missing = sorted(set(gt) - set(pred))
    if missing:
        raise FacePoseError(f"no prediction for {len(missing)} ground-truth entries, e.g. {missing[0]!r}")
    keys = sorted(gt)
    errs = [image_error(pred[k], gt[k]) for k in keys]
    rep = aggregate(errs, args.cutoff)
    doc = {"report": {**rep.to_dict(), "ids": keys}}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _emit_doc(args, doc, out=str(out / "report.json"))
        _emit(curve_csv(rep), str(out / "curve.csv"))
        _emit(curves_svg({"method": rep.curve}), str(out / "curve.svg"))
    elif args.format == "csv":
        _emit(curve_csv(rep), None)
    else:
        _emit_doc(args, doc)


def cmd_curves(args):
    curves = {}
    labels = args.labels.split(",") if args.labels else [Path(r).parent.name or Path(r).stem for r in args.reports]
    if len(labels) != len(args.reports):
        raise UsageError("--labels must name every report")
    for label, path in zip(labels, args.reports):
        rep = _read_json(path)["report"]
        curves[label] = np.array(rep["curve"], dtype=float)
    rows = ["label,error,fraction"]
    for label, c in curves.items():
        rows += [f"{label},{x:.10g},{y:.10g}" for x, y in c]
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    _emit("\n".join(rows) + "\n", str(out / "curves.csv"))
    _emit(curves_svg(curves), str(out / "curves.svg"))


# -- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--crop-size", type=int, default=256)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    with_model = argparse.ArgumentParser(add_help=False, parents=[common])
    with_model.add_argument("--model", default=None, help="generic model file (LandmarkSet3D JSON)")

    p = _Parser(prog="facepose", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"facepose {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[with_model], help="random poses and exact landmark projections")
    s.add_argument("--poses", type=int, required=True)
    s.add_argument("--rasters", default=None, help="also write PGM rasters to this directory")
    s.add_argument("--raster-side", type=int, default=32)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("augment", parents=[with_model], help="augmented samples with recomputed labels")
    s.add_argument("--landmarks", required=True)
    s.add_argument("--box", required=True, help="x,y,w,h")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--mode", choices=("stream", "paired"), default="stream")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("solve-pose", parents=[with_model], help="6DoF pose from 2D landmarks")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--landmarks")
    g.add_argument("--correspondences")
    s.set_defaults(func=cmd_solve_pose)

    s = sub.add_parser("align", parents=[with_model], help="2D similarity to a reference template")
    s.add_argument("--pose", required=True)
    s.add_argument("--template", default=None)
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("predict-landmarks", parents=[with_model], help="project the generic model")
    s.add_argument("--pose", required=True)
    s.set_defaults(func=cmd_predict_landmarks)

    s = sub.add_parser("train", parents=[with_model], help="train the pose regressor on synthetic views")
    s.add_argument("--n-train", type=int, default=5000)
    s.add_argument("--n-test", type=int, default=0)
    s.add_argument("--side", type=int, default=32)
    s.add_argument("--hidden", default="256,64")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--learning-rate", type=float, default=1e-2)
    s.add_argument("--summary", default=None, help="write the training summary here (default stdout)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("infer", parents=[common], help="pose from a raster with a trained model")
    s.add_argument("--model", required=True, help="trained regressor (.npz)")
    s.add_argument("--raster", required=True, help="8-bit PGM or float CSV")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("eval", parents=[common], help="normalized landmark error report")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--cutoff", type=float, default=0.10)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("curves", parents=[common], help="plot accumulative curves of eval reports")
    s.add_argument("--reports", nargs="+", required=True)
    s.add_argument("--labels", default=None)
    s.set_defaults(func=cmd_curves)
    return p


def _fail(kind, exc, code):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": str(exc)}}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except (FacePoseError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_DATA)
    return 0


if __name__ == "__main__":
    sys.exit(main())
