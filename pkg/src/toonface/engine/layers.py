"""Layers used by the recognizer and the landmark regressor.

Convolutions are valid (no padding) with stride 1; pooling strides equal
the pool shape with floor semantics, so trailing rows/columns that do
not fill a window are dropped. Batch norm keeps per-channel running
statistics for inference.
"""

from __future__ import annotations

import numpy as np

from .init import glorot_uniform, uniform_init
from .tensor import (
    Parameter,
    ShapeError,
    Tensor,
    add_rowvec,
    dropout,
    leaky_relu,
    matmul,
    softmax,
)


def conv2d_forward(x, filters, bias):
    """Valid cross-correlation of (N,C,H,W) input with (F,C,kh,kw) filters.

    Output is (N, F, H-kh+1, W-kw+1). Implemented as im2col plus one
    matmul so the inner loops stay in BLAS.
    """
    if x.data.ndim != 4:
        raise ShapeError(f"conv input must be (N,C,H,W), got {x.data.shape}")
    if filters.data.ndim != 4:
        raise ShapeError(f"filters must be (F,C,kh,kw), got {filters.data.shape}")
    n, c, h, w = x.data.shape
    f, fc, kh, kw = filters.data.shape
    if fc != c:
        raise ShapeError(
            f"input has {c} channels but filters expect {fc} "
            f"(input {x.data.shape}, filters {filters.data.shape})")
    if h < kh or w < kw:
        raise ShapeError(
            f"spatial size {h}x{w} smaller than filter {kh}x{kw}")
    if bias.data.shape != (f,):
        raise ShapeError(f"bias must be ({f},), got {bias.data.shape}")

    ho, wo = h - kh + 1, w - kw + 1
    # (N, C, Ho, Wo, kh, kw) windows -> (N*Ho*Wo, C*kh*kw) columns
    windows = np.lib.stride_tricks.sliding_window_view(x.data, (kh, kw), axis=(2, 3))
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * ho * wo, c * kh * kw)
    wmat = filters.data.reshape(f, c * kh * kw)
    out = (cols @ wmat.T + bias.data).reshape(n, ho, wo, f).transpose(0, 3, 1, 2)

    def back(g):
        gcols = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * ho * wo, f)
        dw = (gcols.T @ cols).reshape(f, c, kh, kw)
        db = gcols.sum(axis=0)
        dcols = (gcols @ wmat).reshape(n, ho, wo, c, kh, kw)
        dx = np.zeros((n, c, h, w))
        for di in range(kh):
            for dj in range(kw):
                dx[:, :, di:di + ho, dj:dj + wo] += dcols[:, :, :, :, di, dj].transpose(
                    0, 3, 1, 2)
        return dx, dw, db

    return Tensor(out, (x, filters, bias), back)


def maxpool2d_forward(x, pool=(2, 2)):
    """Max pooling with stride equal to the pool shape.

    Gradient routes to the arg-max position of each window only, taking
    the first occurrence in row-major order on ties.
    """
    if x.data.ndim != 4:
        raise ShapeError(f"pool input must be (N,C,H,W), got {x.data.shape}")
    ph, pw = pool
    if ph < 1 or pw < 1:
        raise ValueError(f"pool shape must be positive, got {pool}")
    n, c, h, w = x.data.shape
    if h < ph or w < pw:
        raise ShapeError(f"spatial size {h}x{w} smaller than pool {ph}x{pw}")
    ho, wo = h // ph, w // pw
    crop = x.data[:, :, :ho * ph, :wo * pw]
    windows = crop.reshape(n, c, ho, ph, wo, pw).transpose(0, 1, 2, 4, 3, 5).reshape(
        n, c, ho, wo, ph * pw)
    idx = windows.argmax(axis=-1)  # argmax takes the first maximum
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]

    def back(g):
        dwin = np.zeros((n, c, ho, wo, ph * pw))
        np.put_along_axis(dwin, idx[..., None], g[..., None], axis=-1)
        dx = np.zeros((n, c, h, w))
        dx[:, :, :ho * ph, :wo * pw] = dwin.reshape(
            n, c, ho, wo, ph, pw).transpose(0, 1, 2, 4, 3, 5).reshape(
            n, c, ho * ph, wo * pw)
        return (dx,)

    return Tensor(out, (x,), back)


def batchnorm_forward(x, gamma, beta, state, mode, eps=1e-5, momentum=0.9):
    """Normalize per channel, scale by gamma and shift by beta.

    Train mode uses batch statistics (population variance) and folds them
    into the running statistics held by ``state``; infer mode uses the
    running statistics only. 2-d inputs normalize over the batch axis,
    4-d inputs over batch and spatial axes.
    """
    if x.data.ndim == 2:
        axes = (0,)
    elif x.data.ndim == 4:
        axes = (0, 2, 3)
    else:
        raise ShapeError(f"batchnorm expects 2-d or 4-d input, got {x.data.shape}")
    channels = x.data.shape[1]
    if gamma.data.shape != (channels,) or beta.data.shape != (channels,):
        raise ShapeError(
            f"gamma/beta must be ({channels},), got {gamma.data.shape}/{beta.data.shape}")

    def expand(v):
        return v.reshape((1, channels) + (1,) * (x.data.ndim - 2))

    if mode == "train":
        if x.data.shape[0] < 2:
            raise ShapeError("train-mode batchnorm needs batch size >= 2")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        state.update(mean, var, momentum)
    elif mode == "infer":
        mean, var = state.running_mean, state.running_var
    else:
        raise ValueError(f"unknown mode {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - expand(mean)) * expand(inv_std)
    out = xhat * expand(gamma.data) + expand(beta.data)

    m = x.data.size // channels

    def back(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * expand(gamma.data)
        if mode == "infer":
            dx = dxhat * expand(inv_std)
        else:
            # dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
            t1 = dxhat.sum(axis=axes) / m
            t2 = (dxhat * xhat).sum(axis=axes) / m
            dx = expand(inv_std) * (dxhat - expand(t1) - xhat * expand(t2))
        return dx, dgamma, dbeta

    return Tensor(out, (x, gamma, beta), back)


class BatchNormState:
    """Running mean/variance buffers shared across forward calls."""

    def __init__(self, channels):
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def update(self, mean, var, momentum):
        self.running_mean = momentum * self.running_mean + (1.0 - momentum) * mean
        self.running_var = momentum * self.running_var + (1.0 - momentum) * var


ACTIVATIONS = ("linear", "leaky_relu", "softmax")


def dense_forward(x, weight, bias, activation="linear", slope=0.01):
    """Affine map (N,D)@(D,K)+(K,) followed by the named activation."""
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    if x.data.ndim != 2:
        raise ShapeError(f"dense input must be (N,D), got {x.data.shape}")
    if x.data.shape[1] != weight.data.shape[0]:
        raise ShapeError(
            f"dense input width {x.data.shape[1]} does not match weight rows "
            f"{weight.data.shape[0]}")
    out = add_rowvec(matmul(x, weight), bias)
    if activation == "leaky_relu":
        out = leaky_relu(out, slope)
    elif activation == "softmax":
        out = softmax(out)
    return out


# ---------------------------------------------------------------------------
# Stateful layer objects: hold Parameters, apply the ops above.
# ---------------------------------------------------------------------------

class Conv2d:
    def __init__(self, in_channels, filters, kernel, rng, name, weight_limit=0.05):
        kh, kw = kernel
        if kh < 1 or kw < 1 or filters < 1:
            raise ValueError(f"bad conv geometry: {filters} filters of {kernel}")
        self.kernel = (kh, kw)
        self.weight = Parameter(
            uniform_init((filters, in_channels, kh, kw), rng, weight_limit),
            f"{name}.weight")
        self.bias = Parameter(np.zeros(filters), f"{name}.bias")

    def __call__(self, x):
        return conv2d_forward(x, self.weight, self.bias)

    def parameters(self):
        return [self.weight, self.bias]


class MaxPool2d:
    def __init__(self, pool=(2, 2)):
        self.pool = pool

    def __call__(self, x):
        return maxpool2d_forward(x, self.pool)

    def parameters(self):
        return []


class BatchNorm:
    def __init__(self, channels, name, eps=1e-5, momentum=0.9):
        self.gamma = Parameter(np.ones(channels), f"{name}.gamma")
        self.beta = Parameter(np.zeros(channels), f"{name}.beta")
        self.state = BatchNormState(channels)
        self.eps = eps
        self.momentum = momentum
        self.name = name

    def __call__(self, x, mode):
        return batchnorm_forward(
            x, self.gamma, self.beta, self.state, mode, self.eps, self.momentum)

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return {
            f"{self.name}.running_mean": self.state.running_mean,
            f"{self.name}.running_var": self.state.running_var,
        }

    def load_buffers(self, buffers):
        self.state.running_mean = np.array(buffers[f"{self.name}.running_mean"])
        self.state.running_var = np.array(buffers[f"{self.name}.running_var"])


class Dense:
    def __init__(self, in_width, out_width, rng, name, activation="linear",
                 slope=0.01):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weight = Parameter(
            glorot_uniform(in_width, out_width, (in_width, out_width), rng),
            f"{name}.weight")
        self.bias = Parameter(np.zeros(out_width), f"{name}.bias")
        self.activation = activation
        self.slope = slope

    def __call__(self, x):
        return dense_forward(x, self.weight, self.bias, self.activation, self.slope)

    def parameters(self):
        return [self.weight, self.bias]


class Dropout:
    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0,1), got {rate}")
        self.rate = rate

    def __call__(self, x, mode, rng=None):
        return dropout(x, self.rate, mode, rng)

    def parameters(self):
        return []
