"""Shared training bookkeeping for the neural models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingError(RuntimeError):
    """Raised when a training run cannot proceed (bad data, diverged loss)."""


@dataclass
class TrainRun:
    """Per-run record: losses, metrics and convergence bookkeeping.

    step_losses holds one tuple per optimizer step; for the two-headed
    recognizer that is (total, main, aux), for the regressor (loss,).
    Metric lists carry accuracy (classifier) or pixel RMSE (regressor).
    """
    seed: int
    batch_size: int
    max_epochs: int
    epochs_run: int = 0
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    train_metrics: list = field(default_factory=list)
    val_metrics: list = field(default_factory=list)
    main_val_losses: list = field(default_factory=list)
    aux_val_losses: list = field(default_factory=list)
    step_losses: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)
    convergence_epoch: int = 0


def convergence_epoch(losses, min_improvement=1e-4):
    """First epoch (1-based) after which the best loss never improves by
    more than min_improvement."""
    if not losses:
        return 0
    best = losses[0]
    last_improvement = 1
    for epoch, loss in enumerate(losses[1:], start=2):
        if best - loss > min_improvement:
            last_improvement = epoch
        best = min(best, loss)
    return last_improvement


def spawn_rng(seed, key):
    """Independent stream for one consumer (shuffling, dropout, ...)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def minibatches(n, batch_size, rng):
    """Shuffled index batches; a trailing singleton is merged into the
    previous batch so batch statistics stay well-defined."""
    if n < 1:
        raise TrainingError("empty dataset")
    order = rng.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches
