import json

import numpy as np
import pytest

from facepose.geometry import Pose6DoF
from facepose.landmarks import generic_model, load_model, make_symmetric_model, predict_landmarks
from facepose.pnp import synthesize_pose_label
from facepose.schemes import IBUG68

from conftest import random_head_pose


class TestGenericModel:
    def test_packaged_file_matches_construction(self, model):
        np.testing.assert_allclose(model.points, make_symmetric_model(), atol=1e-12)

    def test_shape_and_scheme(self, model):
        assert model.points.shape == (68, 3)
        assert model.landmarks.scheme == "ibug68"

    def test_unit_inter_ocular(self, model):
        assert model.inter_ocular() == pytest.approx(1.0, abs=1e-12)

    def test_bilateral_symmetry(self, model):
        mirrored = model.points[list(IBUG68.mirror)] * [-1, 1, 1]
        np.testing.assert_allclose(mirrored, model.points, atol=1e-12)

    def test_nose_in_front_of_eyes(self, model):
        # Camera looks along +z, so the nose tip has the smallest z.
        assert model.points[30, 2] < model.points[36, 2]

    def test_load_from_path(self, model, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(model.to_dict()))
        np.testing.assert_array_equal(load_model(path).points, model.points)


class TestPrediction:
    def test_frontal_symmetric(self, model, cam):
        lm = predict_landmarks(Pose6DoF([0, 0, 0], [0, 0, 4]), model, cam)
        cx = cam.principal_point[0]
        mirrored = lm.points[list(IBUG68.mirror)].copy()
        mirrored[:, 0] = 2 * cx - mirrored[:, 0]
        np.testing.assert_allclose(mirrored, lm.points, atol=1e-9)

    def test_closed_loop(self, model, cam):
        rng = np.random.default_rng(20)
        for _ in range(300):
            lm = predict_landmarks(random_head_pose(rng), model, cam)
            again = predict_landmarks(synthesize_pose_label(lm, model, cam), model, cam)
            assert np.abs(again.points - lm.points).max() < 1e-6

    def test_rigid(self, model, cam):
        # Outer corners sit at z = 0.05, so their image distance scales as 1 / (t_z + 0.05).
        near = predict_landmarks(Pose6DoF([0, 0, 0], [0, 0, 2]), model, cam).points
        far = predict_landmarks(Pose6DoF([0, 0, 0], [0, 0, 4]), model, cam).points
        d = lambda p: np.linalg.norm(p[45] - p[36])
        assert d(near) * 2.05 == pytest.approx(d(far) * 4.05, rel=1e-12)

    def test_expression_residual_concentrates_at_mouth(self, model, cam):
        # An open mouth cannot be represented; the rigid fit leaves the error there.
        pose = Pose6DoF.from_euler(0.1, 0.2, 0.0, [0, 0, 4])
        lm = predict_landmarks(pose, model, cam)
        pts = lm.points.copy()
        pts[[56, 57, 58, 65, 66, 67]] += [0, 8.0]
        fit = predict_landmarks(synthesize_pose_label(lm.with_points(pts), model, cam), model, cam)
        err = np.linalg.norm(fit.points - pts, axis=1)
        mouth = np.arange(48, 68)
        assert err[mouth].mean() > 3 * np.delete(err, mouth).mean()

    def test_generic_model_cached_equal(self):
        np.testing.assert_array_equal(generic_model().points, generic_model().points)
