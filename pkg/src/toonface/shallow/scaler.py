"""Min-max feature normalization into [0,1]."""

from __future__ import annotations

import numpy as np


class MinMaxScaler:
    """Learns per-feature min/max on training rows; application clamps.

    Constant columns map to 0 rather than dividing by zero.
    """

    def __init__(self):
        self.mins = None
        self.maxs = None

    def fit(self, rows):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError(f"scaler needs a nonempty (n,d) matrix, "
                             f"got shape {rows.shape}")
        self.mins = rows.min(axis=0)
        self.maxs = rows.max(axis=0)
        return self

    def transform(self, rows):
        if self.mins is None:
            raise ValueError("scaler must be fit before transform")
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.mins.shape[0]:
            raise ValueError(
                f"expected (n,{self.mins.shape[0]}) rows, got {rows.shape}")
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        scaled = (rows - self.mins) / safe
        scaled[:, span == 0] = 0.0
        return np.clip(scaled, 0.0, 1.0)

    def fit_transform(self, rows):
        return self.fit(rows).transform(rows)

    def to_payload(self):
        return {}, {"mins": self.mins, "maxs": self.maxs}

    @classmethod
    def from_payload(cls, config, tensors):
        scaler = cls()
        scaler.mins = np.asarray(tensors["mins"])
        scaler.maxs = np.asarray(tensors["maxs"])
        return scaler
