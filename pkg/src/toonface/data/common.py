"""Shared data-layer plumbing: errors and reproducible rng derivation."""

from __future__ import annotations

import hashlib

import numpy as np

FRAME = 96  # all samples live on a 96x96 canvas

GENDERS = ("male", "female")


class DataError(ValueError):
    """Malformed input data; message carries row/line context."""


def stable_hash(text):
    """Platform-independent 64-bit hash of a string."""
    digest = hashlib.blake2s(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(seed, *parts):
    """Generator seeded from a base seed plus string/int context parts.

    Keyed per sample and op index, augmentation stays reproducible no
    matter what order the dataset is processed in.
    """
    entropy = [int(seed)]
    for part in parts:
        entropy.append(stable_hash(part) if isinstance(part, str) else int(part))
    return np.random.default_rng(entropy)
