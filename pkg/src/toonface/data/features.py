"""Loader for precomputed 2048-dimensional feature vectors."""

from __future__ import annotations

import numpy as np

from .common import DataError

FEATURE_DIM = 2048


def load_feature_vectors(path, expected_dim=FEATURE_DIM):
    """Parse `image_id,label,f0,...,f2047` rows.

    Returns (ids, X, y, vocabulary): X is (n, expected_dim) float64, y
    holds dense indices into the sorted label vocabulary. A leading
    header line is tolerated and skipped.
    """
    ids = []
    raw_labels = []
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for row_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if row_no == 1 and line.lower().startswith("image_id,label"):
                continue
            cells = line.split(",")
            if len(cells) != 2 + expected_dim:
                raise DataError(
                    f"{path}: row {row_no}: expected {2 + expected_dim} "
                    f"columns (id, label, {expected_dim} features), "
                    f"got {len(cells)}")
            try:
                values = np.array([float(c) for c in cells[2:]])
            except ValueError:
                raise DataError(
                    f"{path}: row {row_no}: non-numeric feature value") from None
            if not np.isfinite(values).all():
                raise DataError(f"{path}: row {row_no}: non-finite feature value")
            ids.append(cells[0])
            raw_labels.append(cells[1])
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no feature rows")
    vocabulary = sorted(set(raw_labels))
    index = {label: i for i, label in enumerate(vocabulary)}
    y = np.array([index[label] for label in raw_labels], dtype=int)
    return ids, np.vstack(rows), y, vocabulary


def save_feature_vectors(path, ids, X, labels):
    """Inverse of load_feature_vectors; labels are written as given."""
    X = np.asarray(X)
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, label, row in zip(ids, labels, X):
            cells = [str(image_id), str(label)] + [repr(float(v)) for v in row]
            fh.write(",".join(cells) + "\n")
