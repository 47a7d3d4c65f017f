"""Training losses: categorical cross-entropy and masked squared error."""

from __future__ import annotations

import numpy as np

from .tensor import EngineError, ShapeError, Tensor


def softmax_cross_entropy(logits, one_hot_targets):
    """Mean categorical cross-entropy over the batch.

    Returns (loss, probabilities). The log-sum-exp is computed with
    max-subtraction; the gradient with respect to the logits is
    (p - y) / N.
    """
    y = np.asarray(one_hot_targets, dtype=np.float64)
    if logits.data.ndim != 2 or y.shape != logits.data.shape:
        raise ShapeError(
            f"logits {logits.data.shape} and targets {y.shape} must both be (N,K)")
    if not np.isfinite(logits.data).all():
        raise EngineError("logits contain non-finite values")
    row_sums = y.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-9):
        raise ValueError("each target row must sum to 1")

    n = logits.data.shape[0]
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    probs = np.exp(log_p)
    loss_value = -(y * log_p).sum() / n

    def back(g):
        return (g * (probs - y) / n,)

    return Tensor(loss_value, (logits,), back), probs


def masked_squared_error(pred, targets, mask):
    """Mean of squared errors over unmasked coordinates only.

    ``mask`` is 1 where the target is present and 0 where it is missing;
    masked coordinates contribute nothing to the loss or the gradient.
    """
    t = np.asarray(targets, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if pred.data.shape != t.shape or t.shape != m.shape:
        raise ShapeError(
            f"pred {pred.data.shape}, targets {t.shape} and mask {m.shape} must match")
    count = m.sum()
    if count == 0:
        raise ValueError("mask leaves no coordinates to score")
    diff = (pred.data - np.where(m > 0, t, 0.0)) * m
    loss_value = (diff * diff).sum() / count

    def back(g):
        return (g * 2.0 * diff / count,)

    return Tensor(loss_value, (pred,), back)
