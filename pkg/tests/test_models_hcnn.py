"""Recognizer assembly, loss wiring, training behavior."""

import numpy as np
import pytest

from synth import recognition_dataset
from toonface.models import (
    ClassifierData,
    Hcnn,
    HcnnConfig,
    TrainingError,
    hcnn_loss,
    landmark_features,
    ranked_predictions,
    spatial_trace,
    train_hcnn,
)

SMALL = dict(conv_filters=(3, 4, 5, 6), fc_widths=(12, 8),
             main_widths=(14, 7))


def small_model(num_classes=3, seed=0, **overrides):
    return Hcnn(HcnnConfig(num_classes=num_classes, **{**SMALL, **overrides}),
                seed=seed)


def small_data(seed=0, n_per_class=6):
    pixels, landmarks, labels = recognition_dataset(n_per_class, seed=seed)
    features, _ = landmark_features(landmarks)
    return ClassifierData(pixels, features, labels)


def test_config_rejects_bad_shapes():
    with pytest.raises(ValueError):
        HcnnConfig(num_classes=1)
    with pytest.raises(ValueError):
        HcnnConfig(num_classes=3, conv_shapes=((4, 4), (3, 3), (2, 2)))
    with pytest.raises(ValueError):
        HcnnConfig(num_classes=3,
                   conv_shapes=((3, 3), (3, 3), (2, 2), (1, 1)))
    with pytest.raises(ValueError):
        HcnnConfig(num_classes=3, dropout_rate=1.0)
    with pytest.raises(ValueError):
        HcnnConfig(num_classes=3, aux_discount=-0.1)


def test_spatial_trace_and_flat_width():
    config = HcnnConfig(num_classes=100)
    assert spatial_trace(config) == [96, 93, 46, 44, 22, 21, 10, 10, 5]
    model = Hcnn(config, seed=0)
    assert model.flat_width == 5 * 5 * 256 == 6400
    assert model.aux_head.weight.data.shape == (256, 100)
    assert model.main_head.weight.data.shape == (128, 100)
    assert model.main_in_width == 256 + 6400 + 30


def test_shortcut_off_shrinks_main_input_by_flat_width():
    with_skip = small_model()
    without = small_model(shortcut=False)
    assert with_skip.main_in_width - without.main_in_width \
        == with_skip.flat_width


def test_hcnn_loss_examples():
    assert hcnn_loss(1.0, 0.5) == pytest.approx(1.3)
    assert hcnn_loss(2.5, 0.0) == 2.5
    assert hcnn_loss(0.0, 1.0) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        hcnn_loss(-1.0, 0.5)
    with pytest.raises(ValueError):
        hcnn_loss(float("nan"), 0.5)


def test_forward_shapes_and_two_heads():
    model = small_model()
    data = small_data(n_per_class=2)
    main, aux = model.forward(data.pixels, data.landmarks, "train",
                              np.random.default_rng(0))
    assert main.data.shape == (6, 3)
    assert aux.data.shape == (6, 3)


def test_total_loss_is_main_plus_discounted_aux():
    model = small_model()
    data = small_data(n_per_class=4)
    one_hot = np.eye(3)[data.labels]
    for seed in range(5):
        total, main, aux = model.losses(data.pixels, data.landmarks, one_hot,
                                        "train", np.random.default_rng(seed))
        assert abs(total.data - (main.data + 0.6 * aux.data)) <= 1e-12


def test_assembled_network_gradient_check():
    # end-to-end tape through conv stacks, BN, shortcut concat, dropout
    # and both heads; dropout must reseed per evaluation
    from util import param_fd_check

    pixels, landmarks, labels = recognition_dataset(1, seed=5)
    pixels = pixels[:, None, :, :]
    features, _ = landmark_features(landmarks)
    one_hot = np.eye(3)[labels]
    model = Hcnn(HcnnConfig(num_classes=3, conv_filters=(2, 2, 2, 2),
                            fc_widths=(4, 3), main_widths=(5, 4)), seed=11)

    def build_loss():
        total, _, _ = model.losses(pixels, features, one_hot, "train",
                                   np.random.default_rng(99))
        return total

    param_fd_check(build_loss, model.parameters(),
                   np.random.default_rng(3), coords_per_param=2)


def test_landmark_features_impute_and_scale():
    landmarks = np.full((3, 15, 2), np.nan)
    landmarks[0, 0] = (48.0, 0.0)
    landmarks[1, 0] = (96.0, 48.0)
    features, means = landmark_features(landmarks)
    # column 0 mean = 72, column 1 mean = 24; untouched columns fall back
    # to the frame center 48 -> scaled 0
    np.testing.assert_allclose(means[0], 72.0)
    np.testing.assert_allclose(means[1], 24.0)
    np.testing.assert_allclose(means[2:], 48.0)
    np.testing.assert_allclose(features[0, 0], 0.0)
    np.testing.assert_allclose(features[1, 0], 1.0)
    np.testing.assert_allclose(features[2, 0], 0.5)  # imputed then scaled
    np.testing.assert_allclose(features[:, 2:], 0.0)
    # frozen means reused verbatim for held-out data
    again, _ = landmark_features(np.full((2, 15, 2), np.nan), means)
    np.testing.assert_allclose(again[:, 0], 0.5)


def test_training_is_deterministic():
    runs = []
    for _ in range(2):
        model = small_model(seed=11)
        run = train_hcnn(model, small_data(seed=3), batch_size=8,
                         max_epochs=3, seed=5)
        runs.append(run)
    assert runs[0].step_losses == runs[1].step_losses
    assert runs[0].train_losses == runs[1].train_losses


def test_step_logs_compose_main_and_aux():
    model = small_model(seed=2)
    run = train_hcnn(model, small_data(seed=4), batch_size=9, max_epochs=2,
                     seed=0)
    assert run.step_losses
    for total, main, aux in run.step_losses:
        assert abs(total - (main + 0.6 * aux)) <= 1e-12


def test_discount_zero_trains_single_headed():
    model = small_model(aux_discount=0.0)
    data = small_data()
    one_hot = np.eye(3)[data.labels]
    total, main, aux = model.losses(data.pixels, data.landmarks, one_hot,
                                    "train", np.random.default_rng(0))
    assert total.data == main.data
    from toonface.engine import backward
    backward(total)
    for param in model.aux_parameters():
        np.testing.assert_array_equal(param.grad, 0.0)


def test_empty_dataset_rejected():
    with pytest.raises(TrainingError):
        ClassifierData(np.zeros((0, 96, 96)), np.zeros((0, 30)),
                       np.zeros(0, dtype=int))


def test_bad_max_epochs_rejected():
    with pytest.raises(ValueError):
        train_hcnn(small_model(), small_data(), max_epochs=0)


def test_labels_out_of_range_rejected():
    data = small_data()
    data.labels[0] = 7
    with pytest.raises(TrainingError):
        train_hcnn(small_model(), data, max_epochs=1)


def test_synthetic_training_reaches_high_accuracy():
    pixels, landmarks, labels = recognition_dataset(20, seed=1)
    features, _ = landmark_features(landmarks)
    data = ClassifierData(pixels, features, labels)
    model = small_model(seed=0)
    run = train_hcnn(model, data, batch_size=32, max_epochs=200, seed=0,
                     stop_at_train_accuracy=0.95)
    assert max(run.train_metrics) >= 0.95
    assert run.epochs_run <= 200
    assert run.convergence_epoch <= run.epochs_run


def test_ranked_predictions_ordering_and_ties():
    model = small_model(seed=3)
    data = small_data(seed=6)
    indices, probs = ranked_predictions(model, data.pixels, data.landmarks)
    assert np.all(np.diff(probs, axis=1) <= 1e-15)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    top1, _ = ranked_predictions(model, data.pixels, data.landmarks, k=1)
    np.testing.assert_array_equal(top1[:, 0], indices[:, 0])
    with pytest.raises(ValueError):
        ranked_predictions(model, data.pixels, data.landmarks, k=4)
    with pytest.raises(ValueError):
        ranked_predictions(model, data.pixels, data.landmarks, k=0)
    # degenerate equal logits rank classes by ascending index
    model.main_head.weight.data[:] = 0.0
    model.main_head.bias.data[:] = 0.0
    tied, tied_probs = ranked_predictions(model, data.pixels, data.landmarks)
    np.testing.assert_array_equal(tied, np.tile([0, 1, 2], (len(data), 1)))
    np.testing.assert_allclose(tied_probs, 1 / 3)


def test_infer_mode_invariant_to_batch_composition():
    model = small_model(seed=7)
    data = small_data(seed=8)
    train_hcnn(model, data, batch_size=6, max_epochs=2, seed=1)
    full = model.predict_proba(data.pixels, data.landmarks)
    one_by_one = np.concatenate([
        model.predict_proba(data.pixels[i:i + 1], data.landmarks[i:i + 1])
        for i in range(len(data))])
    # batch-size-dependent BLAS summation order wiggles the last bits;
    # statistics leakage would show up orders of magnitude above this
    np.testing.assert_allclose(one_by_one, full, atol=1e-12)
