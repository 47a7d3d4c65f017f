"""Optimizers and the plateau learning-rate schedule."""

from __future__ import annotations

import numpy as np

from .tensor import EngineError


class Adam:
    """Bias-corrected Adam with the usual constants as defaults."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        if any(p.grad is None for p in self.params):
            raise EngineError("step called with unpopulated gradients")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            update = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if np.any(update):
                p.data -= update


class SgdNesterov:
    """SGD with Nesterov momentum in look-ahead form.

    v <- mu*v - lr*g ; w <- w + mu*v - lr*g, with weight decay added to
    the gradient as decay * w.
    """

    def __init__(self, params, lr=0.2, momentum=0.9, weight_decay=0.0001):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.t = 0
        self._velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        if any(p.grad is None for p in self.params):
            raise EngineError("step called with unpopulated gradients")
        self.t += 1
        mu = self.momentum
        for p, v in zip(self.params, self._velocity):
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            v *= mu
            v -= self.lr * g
            update = mu * v - self.lr * g
            if np.any(update):
                p.data += update


class PlateauSchedule:
    """Divide the learning rate by 10 when the watched loss plateaus.

    A plateau is ``patience`` consecutive epochs without the best loss
    improving by more than ``min_improvement``. The first epoch only
    establishes the baseline. The rate never drops below ``floor``.
    """

    def __init__(self, lr, patience=50, min_improvement=1e-4, floor=1e-6):
        if patience < 1:
            raise ValueError(f"patience must be >= 1, got {patience}")
        self.lr = lr
        self.patience = patience
        self.min_improvement = min_improvement
        self.floor = floor
        self._best = None
        self._stale = 0

    def update(self, loss):
        """Record one epoch's loss; returns the (possibly reduced) rate."""
        loss = float(loss)
        if self._best is not None and loss < self._best - self.min_improvement:
            self._best = loss
            self._stale = 0
        else:
            if self._best is None:
                self._best = loss
            self._stale += 1
            if self._stale >= self.patience:
                self.lr = max(self.lr / 10.0, self.floor)
                self._stale = 0
        return self.lr


def plateau_lr_schedule(history, current_lr, patience=50, min_improvement=1e-4,
                        floor=1e-6):
    """Stateless view of :class:`PlateauSchedule`.

    Replays the loss history starting from ``current_lr`` and applies one
    division by 10 for every completed plateau, so a history holding two
    plateaus returns current_lr / 100 (floored).
    """
    sched = PlateauSchedule(current_lr, patience=patience,
                            min_improvement=min_improvement, floor=floor)
    lr = current_lr
    for loss in history:
        lr = sched.update(loss)
    return lr
