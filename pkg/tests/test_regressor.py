import math

import numpy as np
import pytest

from facepose.errors import DivergenceError, EmptyInputError
from facepose.geometry import CameraIntrinsics, Pose6DoF
from facepose.regressor import (
    Hyperparams,
    LabelNormalizer,
    fit_normalizer,
    forward,
    init_model,
    load_model,
    loss_and_grads,
    loss_monotone,
    predict_pose,
    rasterize,
    read_pgm,
    read_raster,
    save_model,
    synthetic_views,
    train,
    write_pgm,
    write_raster_csv,
)

SIDE = 32
CAM32 = CameraIntrinsics.for_crop(SIDE)


def yawed(deg):
    return Pose6DoF.from_euler(0.0, math.radians(deg), 0.0, [0, 0, 3])


def fd_check(model, X, Y, h=1e-5):
    """Largest relative gap between backprop and central differences."""
    _, gW, gb = loss_and_grads(model, X, Y)
    worst = 0.0
    for p, g in zip(model.params(), [x for pair in zip(gW, gb) for x in pair]):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        fd = np.empty_like(flat)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp = loss_and_grads(model, X, Y)[0]
            flat[i] = old - h
            lm = loss_and_grads(model, X, Y)[0]
            flat[i] = old
            fd[i] = (lp - lm) / (2 * h)
        worst = max(worst, np.abs(fd - gflat).max() / max(np.abs(fd).max(), 1e-12))
    return worst


class TestRaster:
    def test_shape_and_range(self, model):
        img = rasterize(yawed(10), model, CAM32)
        assert img.shape == (SIDE, SIDE)
        assert img.min() >= 0.0 and img.max() <= 1.0 and img.max() > 0.1

    def test_deterministic(self, model):
        np.testing.assert_array_equal(rasterize(yawed(10), model, CAM32), rasterize(yawed(10), model, CAM32))

    def test_frontal_symmetric(self, model):
        img = rasterize(yawed(0), model, CAM32)
        np.testing.assert_allclose(img, img[:, ::-1], atol=1e-9)

    def test_opposite_yaw_mirrors(self, model):
        np.testing.assert_allclose(rasterize(yawed(20), model, CAM32),
                                   rasterize(yawed(-20), model, CAM32)[:, ::-1], atol=1e-9)

    def test_pgm_round_trip(self, model, tmp_path):
        img = rasterize(yawed(5), model, CAM32)
        write_pgm(tmp_path / "a.pgm", img)
        back = read_pgm(tmp_path / "a.pgm")
        assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12

    def test_ascii_pgm(self, tmp_path):
        (tmp_path / "b.pgm").write_text("P2\n# comment\n2 2\n255\n0 255\n51 102\n")
        np.testing.assert_allclose(read_raster(tmp_path / "b.pgm"), [[0, 1], [0.2, 0.4]])

    def test_csv_round_trip(self, model, tmp_path):
        img = rasterize(yawed(5), model, CAM32)
        write_raster_csv(tmp_path / "a.csv", img)
        np.testing.assert_allclose(read_raster(tmp_path / "a.csv"), img, atol=1e-12)


class TestNormalizer:
    def test_zero_mean_unit_std(self):
        H = np.random.default_rng(0).normal(3, 2, (50, 6))
        z = fit_normalizer(H).normalize(H)
        np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-12)

    def test_round_trip(self):
        H = np.random.default_rng(1).normal(size=(20, 6))
        n = fit_normalizer(H)
        np.testing.assert_allclose(n.denormalize(n.normalize(H)), H, atol=1e-12)

    def test_constant_dimension(self):
        H = np.random.default_rng(2).normal(size=(20, 6))
        H[:, 3] = 0.0
        n = fit_normalizer(H)
        assert n.degenerate.tolist() == [False, False, False, True, False, False]
        assert np.isfinite(n.normalize(H)).all()
        np.testing.assert_allclose(n.denormalize(n.normalize(H)), H, atol=1e-12)

    def test_too_few(self):
        with pytest.raises(EmptyInputError):
            fit_normalizer([np.zeros(6)])

    def test_dict_round_trip(self):
        n = fit_normalizer(np.random.default_rng(3).normal(size=(5, 6)))
        m = LabelNormalizer.from_dict(n.to_dict())
        np.testing.assert_array_equal(m.mean, n.mean)
        np.testing.assert_array_equal(m.std, n.std)


class TestNetwork:
    def test_shapes(self):
        m = init_model(SIDE * SIDE)
        assert m.sizes == [1024, 256, 64, 6]
        assert forward(m, np.zeros((SIDE, SIDE))).shape == (6,)
        assert forward(m, np.zeros((3, SIDE, SIDE))).shape == (3, 6)

    def test_glorot_bounds(self):
        m = init_model(100, Hyperparams(hidden=(40,)))
        assert np.abs(m.weights[0]).max() <= math.sqrt(6 / 140)
        assert all((b == 0).all() for b in m.biases)

    def test_gradients_small_network(self):
        rng = np.random.default_rng(4)
        m = init_model(16, Hyperparams(hidden=(5, 4)), seed=1)
        X, Y = rng.normal(size=(4, 16)), rng.normal(size=(4, 6))
        assert fd_check(m, X, Y) < 1e-4

    def test_loss_is_mean_over_entries(self):
        m = init_model(4, Hyperparams(hidden=(3,)))
        X, Y = np.ones((2, 4)), np.zeros((2, 6))
        out = forward(m, X)
        assert loss_and_grads(m, X, Y)[0] == pytest.approx(float((out ** 2).sum() / 12))

    def test_loss_monotone_flag(self):
        assert loss_monotone([3.0, 2.0, 2.0, 1.0])
        assert not loss_monotone([3.0, 2.0, 2.1])


class TestTraining:
    def test_memorizes_one_sample(self, model):
        x = rasterize(yawed(15), model, CAM32)[None]
        hp = Hyperparams(batch_size=1, epochs=10_000, halve_every=None, tol=1e-6, learning_rate=1e-3)
        m = train(x, [yawed(15)], hp, seed=0)
        assert m.history[-1] < 1e-6
        assert m.steps <= 10_000
        np.testing.assert_allclose(predict_pose(m, None, x[0]).as_vector(), yawed(15).as_vector(), atol=1e-2)

    def test_bitwise_deterministic(self, model):
        X, P = synthetic_views(40, 5, model)
        hp = Hyperparams(hidden=(16,), epochs=3, batch_size=8)
        a, b = train(X, P, hp, seed=3), train(X, P, hp, seed=3)
        for p, q in zip(a.params(), b.params()):
            np.testing.assert_array_equal(p, q)
        assert a.history == b.history

    def test_divergence(self, model):
        X, P = synthetic_views(20, 6, model)
        with np.errstate(all="ignore"), pytest.raises(DivergenceError):
            train(X, P, Hyperparams(hidden=(16,), epochs=50, learning_rate=1e8), seed=0)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            train(np.zeros((0, 4, 4)), [])

    def test_save_load(self, model, tmp_path):
        X, P = synthetic_views(20, 7, model)
        m = train(X, P, Hyperparams(hidden=(8,), epochs=2, batch_size=4), seed=1)
        save_model(tmp_path / "m.npz", m)
        back = load_model(tmp_path / "m.npz")
        np.testing.assert_array_equal(forward(back, X), forward(m, X))
        assert back.hyperparams == m.hyperparams and back.history == m.history
        np.testing.assert_array_equal(back.normalizer.mean, m.normalizer.mean)

    def test_load_rejects_foreign_file(self, tmp_path):
        np.savez(tmp_path / "x.npz", meta=np.array('{"format": "other"}'))
        with pytest.raises(ValueError):
            load_model(tmp_path / "x.npz")


class TestSyntheticData:
    def test_reproducible(self, model):
        a, pa = synthetic_views(5, 9, model)
        b, pb = synthetic_views(5, 9, model)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal([p.as_vector() for p in pa], [p.as_vector() for p in pb])

    def test_raster_matches_label(self, model):
        X, P = synthetic_views(3, 10, model)
        for x, p in zip(X, P):
            np.testing.assert_array_equal(x, rasterize(p, model, CAM32))
