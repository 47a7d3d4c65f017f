"""Class-count and gender-ratio balancing via seeded augmentation."""

from __future__ import annotations

from collections import defaultdict

from .augment import augment_chain, random_chain
from .common import GENDERS, derive_rng

CLASS_MIN = 600
CLASS_MAX = 800


def _augmented_copies(originals, need, seed, tag=""):
    """Make `need` new samples by cycling originals with fresh op chains.

    Each copy's rng is keyed by (seed, pass tag, source image_id, copy
    index), so the output is stable under reordering and parallel
    fan-out, and ids from different balancing passes cannot collide.
    """
    copies = []
    per_source = defaultdict(int)
    i = 0
    while len(copies) < need:
        source = originals[i % len(originals)]
        per_source[source.image_id] += 1
        k = per_source[source.image_id]
        rng = derive_rng(seed, "aug" + tag, source.image_id, k)
        copies.append(augment_chain(source, random_chain(rng),
                                    f"__aug{tag}{k}"))
        i += 1
    return copies


def balance_classes(samples, min_count=CLASS_MIN, max_count=CLASS_MAX, seed=0):
    """Bring every class count into [min_count, max_count].

    Under-represented classes gain augmented copies; over-represented
    ones are subsampled uniformly at random. Originals are kept whenever
    the class already fits under max_count.
    """
    if not samples:
        raise ValueError("cannot balance an empty dataset")
    by_class = defaultdict(list)
    for s in samples:
        by_class[s.class_label].append(s)
    out = []
    for label in sorted(by_class):
        group = by_class[label]
        n = len(group)
        if n > max_count:
            rng = derive_rng(seed, f"subsample:{label}")
            keep = rng.choice(n, size=max_count, replace=False)
            out.extend(group[i] for i in sorted(keep))
        elif n < min_count:
            out.extend(group)
            out.extend(_augmented_copies(group, min_count - n, seed))
        else:
            out.extend(group)
    return out


def balance_gender(samples, seed=0):
    """Oversample the minority gender until the two counts are equal."""
    by_gender = {g: [s for s in samples if s.gender_label == g]
                 for g in GENDERS}
    for g in GENDERS:
        if not by_gender[g]:
            raise ValueError(f"no samples with gender {g!r}")
    male, female = (len(by_gender[g]) for g in GENDERS)
    if male == female:
        return list(samples)
    minority = GENDERS[0] if male < female else GENDERS[1]
    need = abs(male - female)
    extras = _augmented_copies(by_gender[minority], need, seed, tag="g")
    return list(samples) + extras
