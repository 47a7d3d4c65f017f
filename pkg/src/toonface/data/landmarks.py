"""Landmark tables: the 15-point annotation format and its validation.

Coordinates live in the 96x96 pixel frame, origin top-left. A missing
point is stored as NaN in both coordinates and serializes as an empty
CSV cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .common import FRAME, DataError

LANDMARK_NAMES = (
    "left_eye_center",
    "right_eye_center",
    "left_eye_inner_corner",
    "left_eye_outer_corner",
    "right_eye_inner_corner",
    "right_eye_outer_corner",
    "left_eyebrow_inner_end",
    "left_eyebrow_outer_end",
    "right_eyebrow_inner_end",
    "right_eyebrow_outer_end",
    "nose_tip",
    "mouth_left_corner",
    "mouth_right_corner",
    "mouth_center_top_lip",
    "mouth_center_bottom_lip",
)

N_LANDMARKS = len(LANDMARK_NAMES)

COLUMN_NAMES = tuple(
    f"{name}_{axis}" for name in LANDMARK_NAMES for axis in ("x", "y"))

HEADER = "image_id," + ",".join(COLUMN_NAMES)


def empty_landmarks():
    """A LandmarkSet with every point missing."""
    return np.full((N_LANDMARKS, 2), np.nan)


def present_mask(landmarks):
    """Boolean (15,) vector: True where the point has both coordinates."""
    return ~np.isnan(landmarks).any(axis=1)


def load_landmark_table(path):
    """Parse a landmark CSV into an ordered image_id -> (15,2) array map.

    Rejects wrong column counts, non-numeric cells, coordinates outside
    [0,95], and duplicate ids, naming the offending row.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty landmark table")
    if lines[0].strip() != HEADER:
        raise DataError(f"{path}: bad header, expected {HEADER!r}")
    table = {}
    for row_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 1 + 2 * N_LANDMARKS:
            raise DataError(
                f"{path}: row {row_no}: expected {1 + 2 * N_LANDMARKS} "
                f"columns, got {len(cells)}")
        image_id = cells[0].strip()
        if not image_id:
            raise DataError(f"{path}: row {row_no}: empty image_id")
        if image_id in table:
            raise DataError(f"{path}: row {row_no}: duplicate image_id {image_id!r}")
        coords = empty_landmarks()
        for j, cell in enumerate(cells[1:]):
            cell = cell.strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {row_no}: non-numeric cell "
                    f"{cell!r} in column {COLUMN_NAMES[j]}") from None
            if not np.isfinite(value) or not 0.0 <= value <= FRAME - 1:
                raise DataError(
                    f"{path}: row {row_no}: {COLUMN_NAMES[j]}={value} "
                    f"outside [0,{FRAME - 1}]")
            coords[j // 2, j % 2] = value
        table[image_id] = coords
    return table


def save_landmark_table(path, table, decimals=None):
    """Write the CSV form; missing coordinates become empty cells."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        for image_id, coords in table.items():
            cells = [image_id]
            for value in np.asarray(coords).reshape(-1):
                if np.isnan(value):
                    cells.append("")
                elif decimals is None:
                    cells.append(repr(float(value)))
                else:
                    cells.append(f"{value:.{decimals}f}")
            fh.write(",".join(cells) + "\n")


def column_statistics(table):
    """Per-column mean and sample standard deviation over present values.

    Returns (mean, std, count) arrays of length 30; columns with fewer
    than 2 present values get NaN statistics.
    """
    stacked = np.stack([np.asarray(c).reshape(-1) for c in table.values()]) \
        if table else np.empty((0, 2 * N_LANDMARKS))
    mean = np.full(2 * N_LANDMARKS, np.nan)
    std = np.full(2 * N_LANDMARKS, np.nan)
    count = np.zeros(2 * N_LANDMARKS, dtype=int)
    for j in range(2 * N_LANDMARKS):
        col = stacked[:, j]
        present = col[~np.isnan(col)]
        count[j] = present.size
        if present.size >= 2:
            mean[j] = present.mean()
            std[j] = present.std(ddof=1)
    return mean, std, count


@dataclass
class Violation:
    image_id: str
    column: str
    value: float
    reason: str  # "bounds" or "spread"


@dataclass
class ValidationReport:
    verdicts: dict  # image_id -> (15,) bool array, True = point valid
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def validate_annotations(table, k=3.0, stats=None):
    """Check every present coordinate for range and statistical spread.

    A coordinate is valid when it lies in [0,95] and within mean +/- k
    standard deviations of its column; the statistics come from the table
    itself unless precomputed ones are passed. Missing points are always
    valid. Columns with fewer than 2 present values skip the spread check
    with a warning.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    mean, std, count = column_statistics(table) if stats is None else stats
    report = ValidationReport(verdicts={})
    for j in range(2 * N_LANDMARKS):
        if count[j] < 2:
            report.warnings.append(
                f"column {COLUMN_NAMES[j]}: only {count[j]} present "
                f"value(s), spread check skipped")
    for image_id, coords in table.items():
        flat = np.asarray(coords).reshape(-1)
        valid = np.ones(2 * N_LANDMARKS, dtype=bool)
        for j, value in enumerate(flat):
            if np.isnan(value):
                continue
            if not 0.0 <= value <= FRAME - 1:
                valid[j] = False
                report.violations.append(
                    Violation(image_id, COLUMN_NAMES[j], float(value), "bounds"))
            elif count[j] >= 2 and std[j] > 0 and \
                    abs(value - mean[j]) > k * std[j]:
                valid[j] = False
                report.violations.append(
                    Violation(image_id, COLUMN_NAMES[j], float(value), "spread"))
        report.verdicts[image_id] = valid.reshape(N_LANDMARKS, 2).all(axis=1)
    return report
