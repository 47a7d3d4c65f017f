"""Class/gender balancing and stratified splitting."""

import numpy as np
import pytest

from toonface import data as D


def _samples(class_sizes, gender="male", start=0):
    out = []
    rng = np.random.default_rng(start)
    for label, size in enumerate(class_sizes):
        for i in range(size):
            coords = D.empty_landmarks()
            coords[10] = rng.uniform(20, 75, size=2)
            out.append(D.Sample(f"c{label}_{start + i}",
                                rng.random((96, 96)) * 0.5,
                                label, gender, coords))
    return out


def _counts(samples):
    counts = {}
    for s in samples:
        counts[s.class_label] = counts.get(s.class_label, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# class balancing
# ---------------------------------------------------------------------------

def test_tiny_class_oversampled_to_minimum():
    out = D.balance_classes(_samples([11]), seed=3)
    assert _counts(out)[0] == 600
    originals = [s for s in out if not s.is_augmented()]
    assert len(originals) == 11  # every original retained
    augmented = [s for s in out if s.is_augmented()]
    assert len(augmented) == 589
    assert len({s.image_id for s in out}) == 600  # ids stay unique


def test_in_range_class_untouched():
    samples = _samples([700])
    out = D.balance_classes(samples, seed=0)
    assert [s.image_id for s in out] == [s.image_id for s in samples]


def test_oversized_class_subsampled_to_maximum():
    samples = _samples([900])
    out = D.balance_classes(samples, seed=1)
    assert len(out) == 800
    assert all(not s.is_augmented() for s in out)
    # subsample is a subset of the originals, deterministic per seed
    ids = {s.image_id for s in samples}
    assert all(s.image_id in ids for s in out)
    again = D.balance_classes(samples, seed=1)
    assert [s.image_id for s in out] == [s.image_id for s in again]
    different = D.balance_classes(samples, seed=2)
    assert [s.image_id for s in out] != [s.image_id for s in different]


def test_all_counts_land_in_bounds():
    samples = _samples([11, 650, 900])
    counts = _counts(D.balance_classes(samples, seed=5))
    assert counts == {0: 600, 1: 650, 2: 800}


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        D.balance_classes([])


def test_augmented_copies_are_reproducible_and_transformed():
    samples = _samples([3])
    a = D.balance_classes(samples, min_count=6, max_count=8, seed=9)
    b = D.balance_classes(samples, min_count=6, max_count=8, seed=9)
    assert [s.image_id for s in a] == [s.image_id for s in b]
    for s_a, s_b in zip(a, b):
        np.testing.assert_array_equal(s_a.pixels, s_b.pixels)
    # augmented pixels differ from their source
    source = {s.image_id: s for s in samples}
    for s in a:
        if s.is_augmented():
            origin = source[s.image_id.split("__aug")[0]]
            assert not np.array_equal(s.pixels, origin.pixels)


# ---------------------------------------------------------------------------
# gender balancing
# ---------------------------------------------------------------------------

def _gender_counts(samples):
    male = sum(1 for s in samples if s.gender_label == "male")
    return male, len(samples) - male


def test_minority_gender_oversampled_to_parity():
    samples = _samples([3], gender="male") + _samples([1], gender="female",
                                                      start=100)
    out = D.balance_gender(samples, seed=0)
    assert _gender_counts(out) == (3, 3)
    # majority untouched: all males are the originals
    males = [s for s in out if s.gender_label == "male"]
    assert all(not s.is_augmented() for s in males)


def test_balanced_input_returned_unchanged():
    samples = _samples([2], gender="male") + _samples([2], gender="female",
                                                      start=50)
    out = D.balance_gender(samples, seed=0)
    assert [s.image_id for s in out] == [s.image_id for s in samples]


def test_missing_gender_rejected():
    with pytest.raises(ValueError):
        D.balance_gender(_samples([4], gender="male"))


def test_gender_pass_ids_cannot_collide_with_class_pass():
    samples = _samples([2], gender="male") + _samples([1], gender="female",
                                                      start=100)
    balanced = D.balance_classes(samples, min_count=4, max_count=10, seed=7)
    out = D.balance_gender(balanced, seed=7)
    ids = [s.image_id for s in out]
    assert len(ids) == len(set(ids))
    assert _gender_counts(out)[0] == _gender_counts(out)[1]


# ---------------------------------------------------------------------------
# stratified split
# ---------------------------------------------------------------------------

def test_hundred_samples_split_72_8_20():
    spec = D.stratified_split(_samples([100]), "class", seed=0)
    assert (len(spec.train), len(spec.val), len(spec.test)) == (72, 8, 20)


def test_same_seed_identical_different_seed_not():
    samples = _samples([40, 40])
    a = D.stratified_split(samples, "class", seed=4)
    b = D.stratified_split(samples, "class", seed=4)
    c = D.stratified_split(samples, "class", seed=5)
    assert (a.train, a.val, a.test) == (b.train, b.val, b.test)
    assert a.test != c.test


def test_partitions_disjoint_and_complete():
    samples = _samples([33, 57, 21])
    spec = D.stratified_split(samples, "class", seed=1)
    all_idx = sorted(spec.train + spec.val + spec.test)
    assert all_idx == list(range(len(samples)))


def test_per_stratum_test_fraction_near_20_percent():
    sizes = [33, 57, 21, 100]
    samples = _samples(sizes)
    spec = D.stratified_split(samples, "class", seed=2)
    for label, size in enumerate(sizes):
        in_test = sum(1 for i in spec.test
                      if samples[i].class_label == label)
        assert abs(in_test - 0.2 * size) <= 1.0


def test_gender_key_stratifies_by_gender():
    samples = _samples([10], gender="male") + _samples([30], gender="female",
                                                       start=500)
    spec = D.stratified_split(samples, "gender", seed=0)
    male_test = sum(1 for i in spec.test if samples[i].gender_label == "male")
    assert male_test == 2  # 20% of 10


def test_augmented_samples_rejected_by_split():
    samples = _samples([10])
    augmented = D.balance_classes(samples, min_count=12, max_count=20, seed=0)
    with pytest.raises(ValueError, match="augment"):
        D.stratified_split(augmented, "class", seed=0)


def test_small_stratum_warns():
    with pytest.warns(UserWarning, match="best-effort"):
        D.stratified_split(_samples([3, 50]), "class", seed=0)


def test_unknown_key_rejected():
    with pytest.raises(ValueError):
        D.stratified_split(_samples([10]), "breed", seed=0)
