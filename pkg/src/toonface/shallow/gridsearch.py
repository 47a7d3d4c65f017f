"""Grid search over stratified 10-fold cross-validation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gb import GbParams, gb_train
from .scaler import MinMaxScaler
from .svm import SvmParams, svm_train


def stratified_folds(labels, folds, seed):
    """Deal each class's shuffled members round-robin across folds.

    Returns a list of validation index arrays covering every sample
    exactly once. When the rarest class has fewer members than `folds`,
    the fold count drops to that size with a warning.
    """
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    smallest = int(counts.min())
    if smallest < 2:
        raise ValueError("every class needs at least 2 members for "
                         "cross-validation")
    if smallest < folds:
        warnings.warn(
            f"rarest class has {smallest} members; reducing folds "
            f"from {folds} to {smallest}", stacklevel=2)
        folds = smallest
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=int)
    offset = 0
    for c in classes:
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(len(members))]
        # rotate the starting fold per class so fold sizes stay even
        assignment[members] = (np.arange(len(members)) + offset) % folds
        offset += len(members)
    return [np.flatnonzero(assignment == f) for f in range(folds)]


@dataclass
class GridSearchResult:
    best_params: object
    best_index: int
    mean_accuracy: list
    folds: int
    fold_accuracy: list = field(default_factory=list)


def _train(X, y, params, seed):
    if isinstance(params, SvmParams):
        return svm_train(X, y, params, seed)
    if isinstance(params, GbParams):
        return gb_train(X, y, params, seed)
    raise TypeError(f"unsupported grid cell type {type(params).__name__}")


def _tie_key(params):
    if isinstance(params, SvmParams):
        return (params.C, params.gamma)
    return (params.stages, params.max_depth)


def grid_search_cv(rows, labels, grid, folds=10, seed=0):
    """Mean validation accuracy per grid cell; best cell wins.

    The scaler is re-fit on each fold's training part so no statistics
    leak across the validation boundary. Ties break toward smaller C (or
    fewer stages), then toward earlier grid order.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    X = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels)
    fold_indices = stratified_folds(y, folds, seed)
    all_idx = np.arange(len(y))
    per_cell = [[] for _ in grid]
    for val_idx in fold_indices:
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[val_idx] = False
        train_idx = all_idx[train_mask]
        scaler = MinMaxScaler().fit(X[train_idx])
        x_train = scaler.transform(X[train_idx])
        x_val = scaler.transform(X[val_idx])
        for cell, params in enumerate(grid):
            model = _train(x_train, y[train_idx], params, seed)
            acc = float(np.mean(model.predict(x_val) == y[val_idx]))
            per_cell[cell].append(acc)
    means = [float(np.mean(accs)) for accs in per_cell]
    order = sorted(range(len(grid)),
                   key=lambda i: (-means[i],) + _tie_key(grid[i]) + (i,))
    best = order[0]
    return GridSearchResult(grid[best], best, means, len(fold_indices),
                            per_cell)
