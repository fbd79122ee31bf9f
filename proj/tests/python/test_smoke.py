"""Smoke tests for the hma python module against the staged build tree."""

import math

import numpy as np
import pytest

import hma


def test_embed_round_trip():
    pose = hma.PoseAngles.yaw_pitch_roll(1.2, 0.4, -0.3)
    point = hma.embed(pose)
    assert point.shape == (4,)
    assert abs(np.linalg.norm(point) - 1.0) < 1e-12
    back = hma.recover_angles(point)
    assert hma.angular_error(back.yaw, pose.yaw) < 1e-9
    assert abs(back.pitch - pose.pitch) < 1e-9
    assert abs(back.roll - pose.roll) < 1e-9


def test_gimbal_guard():
    with pytest.raises(hma.GimbalDegenerate):
        hma.recover_angles(np.array([0.0, 0.0, 0.0, 1.0]))


def test_angular_error_wraps():
    deg = math.pi / 180.0
    assert hma.angular_error(359 * deg, 1 * deg) == pytest.approx(2 * deg)


def _trained_space(seed=3):
    spec = hma.SyntheticSpec()
    spec.object_count = 4
    spec.views_per_object = 36
    spec.feature_dim = 24
    spec.harmonic_order = 2
    spec.noise_std = 0.005
    spec.seed = seed
    spec.heldout_every = 4
    manifest = hma.generate_synthetic(spec)

    kernel = hma.KernelConfig()
    kernel.centers = hma.place_centers(10, hma.ManifoldCase.YAW_ONLY)

    models = []
    labels = hma.LabeledStyleSet()
    instance_ids, category_ids = [], []
    for k in range(spec.object_count):
        rows = [r for r in manifest.records
                if r.object_id == f"obj-{k:02d}" and not r.is_test]
        embeddings = np.stack([hma.embed(r.pose) for r in rows])
        observations = np.stack([r.inline_features for r in rows])
        models.append(hma.fit_mapping(embeddings, observations, kernel))
        instance_ids.append(rows[0].object_id)
        category_ids.append(rows[0].category_id)

    space = hma.factorize_models(models)
    labels.styles = space.styles
    labels.instance_ids = instance_ids
    labels.category_ids = category_ids
    heldout = [r for r in manifest.records if r.is_test]
    return space, labels, heldout


def test_fit_factorize_infer_pipeline():
    space, labels, heldout = _trained_space()
    assert space.style_dim == 4

    config = hma.InferenceConfig()
    config.seed = 11
    record = heldout[5]
    result = hma.infer(space, record.inline_features, config)
    assert hma.angular_error(result.pose.yaw, record.pose.yaw) < math.radians(3.0)
    assert result.trace == sorted(result.trace, reverse=True)

    oracle = hma.grid_oracle(space, record.inline_features, math.radians(1.0))
    assert result.reconstruction_error <= 1.10 * oracle.reconstruction_error

    label = hma.knn_classify(labels, result.style, 1, hma.LabelTarget.INSTANCE)
    assert label == record.object_id


def test_model_container_round_trip(tmp_path):
    space, labels, heldout = _trained_space(seed=8)
    container = hma.ModelContainer()
    container.manifold_case = hma.ManifoldCase.YAW_ONLY
    container.space = space
    container.labels = labels
    container.seed = 8

    path = tmp_path / "m.hma-model"
    hma.save_model(container, path)
    loaded = hma.load_model(path)
    np.testing.assert_array_equal(loaded.space.basis, space.basis)
    np.testing.assert_array_equal(loaded.space.styles, space.styles)
    assert loaded.labels.instance_ids == labels.instance_ids

    config = hma.InferenceConfig()
    config.seed = 21
    before = hma.infer(space, heldout[0].inline_features, config)
    after = hma.infer(loaded.space, heldout[0].inline_features, config)
    assert before.reconstruction_error == after.reconstruction_error
    assert before.pose.yaw == after.pose.yaw


def test_features_and_images(tmp_path):
    image = np.zeros((16, 16))
    image[:, 8:] = 255.0

    config = hma.FeatureConfig()
    config.kind = hma.FeatureKind.HOG
    config.resize_rows = 16
    config.resize_cols = 16
    config.hog_grid = 2
    config.hog_bins = 9
    feature = hma.extract(image, config)
    assert feature.values.shape == (2 * 2 * 9,)
    assert feature.values.sum() > 0

    path = tmp_path / "img.png"
    hma.write_image(path, image)
    np.testing.assert_array_equal(hma.read_image(path), image)


def test_evaluate_metrics():
    make = lambda deg: hma.PosePrediction(
        hma.PoseAngles.yaw_only(math.radians(deg)), "c", "i")
    report = hma.evaluate([make(359.0)], [make(1.0)])
    assert report.mae_degrees == pytest.approx(2.0)
    assert report.pct_ae_under_22_5 == 100.0


def test_marginal_weights_worked_example():
    weights = hma.marginal_weights(np.array([[1.0, 1.0], [2.0, 2.0]]))
    np.testing.assert_allclose(weights.style_weights, [1 / 3, 2 / 3])
    np.testing.assert_allclose(weights.viewpoint_weights, [0.5, 0.5])
