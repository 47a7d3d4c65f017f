"""Cross-validated grid search over shallow classifier settings."""

import numpy as np
import pytest

from toonface.shallow import (
    GbParams,
    SvmParams,
    grid_search_cv,
    stratified_folds,
)


def blob_data(seed=0, per_class=20):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [5.0, 0.0]])
    X = np.concatenate([rng.normal(c, 0.5, (per_class, 2)) for c in centers])
    labels = np.repeat([0, 1], per_class)
    order = rng.permutation(len(labels))
    return X[order], labels[order]


def test_folds_partition_every_sample_once():
    labels = np.array([0] * 23 + [1] * 17)
    folds = stratified_folds(labels, folds=10, seed=0)
    assert len(folds) == 10
    seen = np.concatenate(folds)
    np.testing.assert_array_equal(np.sort(seen), np.arange(40))


def test_folds_keep_class_balance():
    labels = np.array([0] * 30 + [1] * 10)
    folds = stratified_folds(labels, folds=10, seed=3)
    for val_idx in folds:
        val_labels = labels[val_idx]
        assert np.sum(val_labels == 0) == 3
        assert np.sum(val_labels == 1) == 1


def test_rare_class_reduces_fold_count_with_warning():
    labels = np.array([0] * 20 + [1] * 4)
    with pytest.warns(UserWarning):
        folds = stratified_folds(labels, folds=10, seed=0)
    assert len(folds) == 4


def test_class_below_two_rejected():
    with pytest.raises(ValueError):
        stratified_folds(np.array([0, 0, 0, 1]), folds=10, seed=0)


def test_single_cell_grid_returned():
    X, labels = blob_data()
    cell = SvmParams(C=50.0, gamma=0.5, probability=False)
    result = grid_search_cv(X, labels, [cell], folds=5, seed=0)
    assert result.best_params == cell
    assert result.best_index == 0
    assert result.folds == 5
    assert len(result.mean_accuracy) == 1
    assert len(result.fold_accuracy[0]) == 5
    assert 0.0 <= result.mean_accuracy[0] <= 1.0
    np.testing.assert_allclose(result.mean_accuracy[0],
                               np.mean(result.fold_accuracy[0]))


def test_degenerate_kernel_width_loses():
    X, labels = blob_data(seed=2)
    grid = [SvmParams(C=50.0, gamma=1e9, probability=False),
            SvmParams(C=50.0, gamma=0.5, probability=False)]
    result = grid_search_cv(X, labels, grid, folds=5, seed=0)
    assert result.best_index == 1
    assert result.mean_accuracy[1] > 0.9
    assert result.mean_accuracy[1] > result.mean_accuracy[0]


def test_accuracy_tie_prefers_smaller_settings():
    X, labels = blob_data(seed=5)
    # both cells separate the blobs perfectly; the smaller C must win
    # regardless of its position in the grid
    grid = [SvmParams(C=100.0, gamma=0.5, probability=False),
            SvmParams(C=1.0, gamma=0.5, probability=False)]
    result = grid_search_cv(X, labels, grid, folds=5, seed=0)
    assert result.mean_accuracy[0] == result.mean_accuracy[1]
    assert result.best_params.C == 1.0


def test_gb_grid_cells_dispatch():
    X, labels = blob_data(seed=7, per_class=15)
    grid = [GbParams(max_depth=1, stages=20)]
    result = grid_search_cv(X, labels, grid, folds=5, seed=0)
    assert result.best_params == grid[0]
    assert result.mean_accuracy[0] > 0.9


def test_scaling_applied_inside_folds():
    # huge feature offsets are harmless when each fold rescales
    X, labels = blob_data(seed=9)
    X = X * np.array([1e4, 1e-3]) + np.array([5e6, -200.0])
    cell = SvmParams(C=50.0, gamma=1.0, probability=False)
    result = grid_search_cv(X, labels, [cell], folds=5, seed=0)
    assert result.mean_accuracy[0] > 0.9


def test_empty_grid_rejected():
    X, labels = blob_data()
    with pytest.raises(ValueError):
        grid_search_cv(X, labels, [], folds=5, seed=0)


def test_mixed_grid_compares_model_families():
    X, labels = blob_data(seed=11, per_class=12)
    grid = [SvmParams(C=50.0, gamma=0.5, probability=False),
            GbParams(max_depth=1, stages=20)]
    result = grid_search_cv(X, labels, grid, folds=4, seed=0)
    assert result.best_index in (0, 1)
    assert len(result.mean_accuracy) == 2
