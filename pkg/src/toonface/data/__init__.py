"""Datasets: normalization, landmark tables, augmentation, balancing, splits."""

from .common import FRAME, GENDERS, DataError, derive_rng, stable_hash
from .landmarks import (
    COLUMN_NAMES,
    HEADER,
    LANDMARK_NAMES,
    N_LANDMARKS,
    ValidationReport,
    Violation,
    column_statistics,
    empty_landmarks,
    load_landmark_table,
    present_mask,
    save_landmark_table,
    validate_annotations,
)
from .images import (
    FrameTransform,
    bilinear_resize,
    load_image,
    normalize_image,
    read_pgm,
    read_ppm,
    to_grayscale,
    write_pgm,
)
from .sample import AUG_MARKER, Sample
from .augment import (
    HFLIP_SWAPS,
    MAX_ROTATE_DEG,
    MAX_SHIFT,
    AugmentOp,
    augment,
    augment_chain,
    bilinear_sample,
    random_chain,
    transform_landmarks,
    transform_pixels,
)
from .balance import CLASS_MAX, CLASS_MIN, balance_classes, balance_gender
from .split import SPLIT_KEYS, SplitSpec, stratified_split
from .features import FEATURE_DIM, load_feature_vectors, save_feature_vectors
from .boxes import load_boxes, save_boxes

__all__ = [
    "AUG_MARKER",
    "AugmentOp",
    "CLASS_MAX",
    "CLASS_MIN",
    "COLUMN_NAMES",
    "DataError",
    "FEATURE_DIM",
    "FRAME",
    "FrameTransform",
    "GENDERS",
    "HEADER",
    "HFLIP_SWAPS",
    "LANDMARK_NAMES",
    "MAX_ROTATE_DEG",
    "MAX_SHIFT",
    "N_LANDMARKS",
    "SPLIT_KEYS",
    "Sample",
    "SplitSpec",
    "ValidationReport",
    "Violation",
    "augment",
    "augment_chain",
    "balance_classes",
    "balance_gender",
    "bilinear_resize",
    "bilinear_sample",
    "column_statistics",
    "derive_rng",
    "empty_landmarks",
    "load_boxes",
    "load_feature_vectors",
    "load_image",
    "load_landmark_table",
    "normalize_image",
    "present_mask",
    "read_pgm",
    "read_ppm",
    "save_boxes",
    "save_feature_vectors",
    "save_landmark_table",
    "stable_hash",
    "stratified_split",
    "to_grayscale",
    "transform_landmarks",
    "transform_pixels",
    "validate_annotations",
    "write_pgm",
]
