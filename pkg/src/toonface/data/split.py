"""Stratified train/validation/test partitioning."""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field

from .common import derive_rng

SPLIT_KEYS = ("class", "gender")


@dataclass
class SplitSpec:
    key: str
    seed: int
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def partitions(self):
        return {"train": self.train, "val": self.val, "test": self.test}


def stratified_split(samples, key, seed):
    """Per-stratum 80:20 train:test, then 10% of train to validation.

    Augmented samples are rejected outright: splitting must happen before
    any augmentation so the test set stays untouched by synthetic data.
    """
    if key not in SPLIT_KEYS:
        raise ValueError(f"split key must be one of {SPLIT_KEYS}, got {key!r}")
    for s in samples:
        if s.is_augmented():
            raise ValueError(
                f"{s.image_id}: augmented samples cannot be split; "
                "split the originals first, then augment the train set")
    strata = defaultdict(list)
    for i, s in enumerate(samples):
        strata[s.class_label if key == "class" else s.gender_label].append(i)
    spec = SplitSpec(key=key, seed=seed)
    for stratum in sorted(strata, key=str):
        indices = strata[stratum]
        n = len(indices)
        if n < 5:
            warnings.warn(
                f"stratum {stratum!r} has only {n} sample(s); "
                "split ratios are best-effort", stacklevel=2)
        rng = derive_rng(seed, f"split:{stratum}")
        order = [indices[j] for j in rng.permutation(n)]
        n_test = round(0.2 * n)
        n_val = round(0.1 * (n - n_test))
        spec.test.extend(order[:n_test])
        spec.val.extend(order[n_test:n_test + n_val])
        spec.train.extend(order[n_test + n_val:])
    spec.train.sort()
    spec.val.sort()
    spec.test.sort()
    return spec
