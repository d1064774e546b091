import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from facepose.cli import main
from facepose.schemas import schema_for


def validate(doc, name):
    jsonschema.validate(doc, schema_for(name))


def jsonl(path):
    lines = [json.loads(l) for l in open(path) if l.strip()]
    validate(lines[0], "header")
    return lines[0], lines[1:]


def run(*argv):
    assert main([str(a) for a in argv]) == 0


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    run("synth", "--poses", 6, "--seed", 3, "--out", d / "gt.jsonl")
    return d / "gt.jsonl"


def first_record(path, dest):
    _, recs = jsonl(path)
    dest.write_text(json.dumps(recs[0]))
    return dest


class TestSynth:
    def test_records(self, synth):
        head, recs = jsonl(synth)
        assert head["meta"]["command"] == "synth" and head["meta"]["seed"] == 3
        assert len(recs) == 6
        for r in recs:
            validate(r, "synth_record")

    def test_byte_identical(self, synth, tmp_path):
        run("synth", "--poses", 6, "--seed", 3, "--out", tmp_path / "again.jsonl")
        assert (tmp_path / "again.jsonl").read_bytes() == synth.read_bytes()

    def test_seed_recorded_when_absent(self, tmp_path):
        run("synth", "--poses", 1, "--out", tmp_path / "s.jsonl")
        head, _ = jsonl(tmp_path / "s.jsonl")
        assert isinstance(head["meta"]["seed"], int)

    def test_rasters(self, tmp_path):
        run("synth", "--poses", 2, "--seed", 1, "--rasters", tmp_path / "r", "--out", tmp_path / "s.jsonl")
        assert sorted(p.name for p in (tmp_path / "r").iterdir()) == ["000000.pgm", "000001.pgm"]


class TestGeometryCommands:
    def test_solve_pose_stream(self, synth, tmp_path):
        run("solve-pose", "--landmarks", synth, "--out", tmp_path / "poses.jsonl")
        _, recs = jsonl(tmp_path / "poses.jsonl")
        _, gt = jsonl(synth)
        for r, g in zip(recs, gt):
            validate(r, "pose_result")
            assert r["id"] == g["id"]
            np.testing.assert_allclose(r["pose"]["rotation"], g["pose"]["rotation"], atol=1e-6)

    def test_solve_pose_single_and_correspondences(self, synth, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        run("solve-pose", "--landmarks", rec, "--out", tmp_path / "a.json")
        a = json.loads((tmp_path / "a.json").read_text())
        validate(a, "pose_result")
        from facepose.landmarks import generic_model
        c = {"model": generic_model().points.tolist(), "image": json.loads(rec.read_text())["landmarks"]["points"]}
        (tmp_path / "c.json").write_text(json.dumps(c))
        run("solve-pose", "--correspondences", tmp_path / "c.json", "--out", tmp_path / "b.json")
        b = json.loads((tmp_path / "b.json").read_text())
        np.testing.assert_allclose(b["pose"]["rotation"], a["pose"]["rotation"], atol=1e-9)

    def test_predict_landmarks(self, synth, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        run("predict-landmarks", "--pose", rec, "--out", tmp_path / "lm.json")
        doc = json.loads((tmp_path / "lm.json").read_text())
        validate(doc, "landmarks_output")
        np.testing.assert_allclose(doc["landmarks"]["points"], json.loads(rec.read_text())["landmarks"]["points"],
                                   atol=1e-9)

    def test_predict_landmarks_csv(self, synth, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        run("predict-landmarks", "--pose", rec, "--format", "csv", "--out", tmp_path / "lm.csv")
        lines = (tmp_path / "lm.csv").read_text().splitlines()
        assert lines[0] == "x,y" and len(lines) == 69

    def test_align(self, synth, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        run("align", "--pose", rec, "--out", tmp_path / "al.json")
        doc = json.loads((tmp_path / "al.json").read_text())
        validate(doc, "alignment")
        validate(doc["template"], "template")

    def test_augment(self, synth, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        run("augment", "--landmarks", rec, "--box=-0.5,-0.5,256,256", "--count", 3, "--seed", 1,
            "--mode", "paired", "--out", tmp_path / "aug")
        _, recs = jsonl(tmp_path / "aug" / "samples.jsonl")
        assert len(recs) == 6
        for r in recs:
            validate(r, "augmented_sample")


class TestEval:
    def test_identical_inputs(self, synth, tmp_path):
        run("eval", "--pred", synth, "--gt", synth, "--out", tmp_path / "ev")
        doc = json.loads((tmp_path / "ev" / "report.json").read_text())
        validate(doc, "error_report")
        assert doc["report"]["mer"] == 0.0 and doc["report"]["auc"] == 1.0
        assert (tmp_path / "ev" / "curve.csv").exists() and (tmp_path / "ev" / "curve.svg").exists()

    def test_closed_loop(self, synth, tmp_path):
        run("solve-pose", "--landmarks", synth, "--out", tmp_path / "poses.jsonl")
        run("predict-landmarks", "--pose", tmp_path / "poses.jsonl", "--out", tmp_path / "pred.jsonl")
        run("eval", "--pred", tmp_path / "pred.jsonl", "--gt", synth, "--out", tmp_path / "ev")
        assert json.loads((tmp_path / "ev" / "report.json").read_text())["report"]["mer"] < 1e-6

    def test_directory_input(self, synth, tmp_path):
        _, recs = jsonl(synth)
        d = tmp_path / "gt"
        d.mkdir()
        for r in recs:
            (d / f"{r['id']}.json").write_text(json.dumps(r["landmarks"]))
        run("eval", "--pred", d, "--gt", synth, "--out", tmp_path / "ev")
        assert json.loads((tmp_path / "ev" / "report.json").read_text())["report"]["n"] == 6

    def test_curves(self, synth, tmp_path):
        run("eval", "--pred", synth, "--gt", synth, "--out", tmp_path / "a")
        run("curves", "--reports", tmp_path / "a" / "report.json", tmp_path / "a" / "report.json",
            "--labels", "x,y", "--out", tmp_path / "c")
        assert (tmp_path / "c" / "curves.svg").read_text().count("<polyline") == 2
        assert (tmp_path / "c" / "curves.csv").read_text().startswith("label,error,fraction")


class TestRegressorCommands:
    def test_train_and_infer(self, tmp_path):
        run("train", "--n-train", 40, "--n-test", 5, "--epochs", 2, "--hidden", "8", "--batch-size", 8,
            "--seed", 1, "--out", tmp_path / "m.npz", "--summary", tmp_path / "s.json")
        summary = json.loads((tmp_path / "s.json").read_text())
        validate(summary, "train_summary")
        assert summary["epochs"] == 2 and "test_median_rotation_error_deg" in summary
        run("synth", "--poses", 1, "--seed", 2, "--rasters", tmp_path / "r", "--out", tmp_path / "s.jsonl")
        run("infer", "--model", tmp_path / "m.npz", "--raster", tmp_path / "r" / "000000.pgm",
            "--out", tmp_path / "p.json")
        validate(json.loads((tmp_path / "p.json").read_text()), "infer")


class TestErrors:
    def error_doc(self, capsys):
        err = capsys.readouterr().err.strip()
        doc = json.loads(err)
        validate(doc, "error")
        return doc

    def test_usage_error(self, capsys):
        assert main(["synth"]) == 2
        assert self.error_doc(capsys)["error"]["type"] == "usage"

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 2
        self.error_doc(capsys)

    def test_bad_box(self, synth, capsys, tmp_path):
        assert main(["augment", "--landmarks", str(synth), "--box", "1,2", "--count", "1"]) == 2
        self.error_doc(capsys)

    def test_missing_file(self, capsys, tmp_path):
        assert main(["solve-pose", "--landmarks", str(tmp_path / "nope.json")]) == 1
        self.error_doc(capsys)

    def test_missing_prediction(self, synth, capsys, tmp_path):
        rec = first_record(synth, tmp_path / "one.json")
        assert main(["eval", "--pred", str(rec), "--gt", str(synth)]) == 1
        self.error_doc(capsys)

    def test_console_script_entry(self):
        out = subprocess.run([sys.executable, "-m", "facepose.cli", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("facepose ")
