"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np


def numeric_gradient(f, x, h=1e-5, coords=None):
    """Central-difference gradient of scalar f at array x.

    f takes an ndarray shaped like x and returns a float. When ``coords``
    is given (a sequence of flat indices) only those entries are probed
    and the rest stay zero; full-size parameters in assembled networks
    are too slow to probe exhaustively.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    indices = range(flat.size) if coords is None else coords
    for i in indices:
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def gradients_close(analytic, numeric, atol=1e-7, rtol=1e-4):
    """Elementwise |a - n| <= atol + rtol * max(|a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {n.shape}")
    bound = atol + rtol * np.maximum(np.abs(a), np.abs(n))
    return bool(np.all(np.abs(a - n) <= bound))


def max_gradient_error(analytic, numeric, coords=None):
    """Worst relative error, guarded against division by ~0."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if coords is not None:
        a = a[list(coords)]
        n = n[list(coords)]
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-7)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
