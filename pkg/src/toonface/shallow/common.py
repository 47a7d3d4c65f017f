"""Shared helpers for serializing shallow models."""

import numpy as np


def encode_classes(classes):
    """Class vocabulary to JSON-safe values plus a kind tag."""
    if all(isinstance(c, (int, np.integer)) for c in classes):
        return "int", [int(c) for c in classes]
    return "str", [str(c) for c in classes]


def decode_classes(kind, values):
    if kind == "int":
        return [int(v) for v in values]
    return [str(v) for v in values]
