"""Weight initializers, all explicitly seeded."""

from __future__ import annotations

import numpy as np


def glorot_uniform(fan_in, fan_out, shape, rng):
    """i.i.d. uniform on [-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError(f"fans must be positive, got ({fan_in}, {fan_out})")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def glorot_limit(fan_in, fan_out):
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError(f"fans must be positive, got ({fan_in}, {fan_out})")
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def uniform_init(shape, rng, limit=0.05):
    """Plain uniform on [-limit, limit], the conv-weight default."""
    return rng.uniform(-limit, limit, size=shape)
