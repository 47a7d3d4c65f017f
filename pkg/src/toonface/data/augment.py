"""Geometric augmentation with coordinate-consistent landmark transforms.

Pixel content is resampled bilinearly with zero fill; landmark points
follow the exact geometric map and fall back to missing when they leave
the frame. A horizontal flip also swaps the left/right identities of
paired landmarks so the semantic labels stay anatomically correct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .common import FRAME

MAX_SHIFT = 0.30 * FRAME  # 28.8 px
MAX_ROTATE_DEG = 30.0

# index pairs exchanged by a horizontal flip (left <-> right)
HFLIP_SWAPS = ((0, 1), (2, 4), (3, 5), (6, 8), (7, 9), (11, 12))

_CENTER = (FRAME - 1) / 2.0  # 47.5; the frame's geometric center pixel


@dataclass(frozen=True)
class AugmentOp:
    kind: str  # hflip | vflip | shift | rotate
    dx: float = 0.0
    dy: float = 0.0
    theta_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hflip", "vflip", "shift", "rotate"):
            raise ValueError(f"unknown augment kind {self.kind!r}")
        if self.kind == "shift":
            if abs(self.dx) > MAX_SHIFT or abs(self.dy) > MAX_SHIFT:
                raise ValueError(
                    f"shift ({self.dx},{self.dy}) exceeds +/-{MAX_SHIFT} px")
        if self.kind == "rotate" and abs(self.theta_deg) > MAX_ROTATE_DEG:
            raise ValueError(
                f"rotation {self.theta_deg} exceeds +/-{MAX_ROTATE_DEG} degrees")

    def inverse(self):
        if self.kind in ("hflip", "vflip"):
            return self
        if self.kind == "shift":
            return AugmentOp("shift", dx=-self.dx, dy=-self.dy)
        return AugmentOp("rotate", theta_deg=-self.theta_deg)


def transform_landmarks(landmarks, op):
    """Exact coordinate map; points leaving [0,95]^2 become missing."""
    out = np.asarray(landmarks, dtype=np.float64).copy()
    if op.kind == "hflip":
        out[:, 0] = (FRAME - 1) - out[:, 0]
        for a, b in HFLIP_SWAPS:
            out[[a, b]] = out[[b, a]]
    elif op.kind == "vflip":
        out[:, 1] = (FRAME - 1) - out[:, 1]
    elif op.kind == "shift":
        out[:, 0] += op.dx
        out[:, 1] += op.dy
    elif op.kind == "rotate":
        theta = math.radians(op.theta_deg)
        c, s = math.cos(theta), math.sin(theta)
        x = out[:, 0] - _CENTER
        y = out[:, 1] - _CENTER
        out[:, 0] = c * x - s * y + _CENTER
        out[:, 1] = s * x + c * y + _CENTER
    # either coordinate out of frame invalidates the whole point
    gone = (out < 0.0) | (out > FRAME - 1)
    out[gone.any(axis=1)] = np.nan
    return out


def bilinear_sample(image, xs, ys):
    """Sample image at real coordinates; outside pixels contribute zero."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros_like(xs, dtype=np.float64)
    for dy_i, dx_i, weight in (
            (0, 0, (1 - fx) * (1 - fy)),
            (0, 1, fx * (1 - fy)),
            (1, 0, (1 - fx) * fy),
            (1, 1, fx * fy)):
        yy = y0 + dy_i
        xx = x0 + dx_i
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        out[inside] += weight[inside] * image[yy[inside], xx[inside]]
    return out


def transform_pixels(pixels, op):
    """Resample the image under the same geometry as the landmarks."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if op.kind == "hflip":
        return pixels[:, ::-1].copy()
    if op.kind == "vflip":
        return pixels[::-1, :].copy()
    cols, rows = np.meshgrid(np.arange(FRAME, dtype=np.float64),
                             np.arange(FRAME, dtype=np.float64))
    if op.kind == "shift":
        src_x = cols - op.dx
        src_y = rows - op.dy
    else:  # rotate: pull each output pixel from the inverse-rotated spot
        theta = math.radians(op.theta_deg)
        c, s = math.cos(theta), math.sin(theta)
        x = cols - _CENTER
        y = rows - _CENTER
        src_x = c * x + s * y + _CENTER
        src_y = -s * x + c * y + _CENTER
    return bilinear_sample(pixels, src_x, src_y)


def augment(sample, op, suffix=""):
    """Apply one op to a sample; missing landmarks stay missing."""
    return sample.derived(suffix,
                          transform_pixels(sample.pixels, op),
                          transform_landmarks(sample.landmarks, op))


def random_chain(rng):
    """Draw a flip -> shift -> rotate chain within the allowed ranges."""
    ops = []
    if rng.random() < 0.5:
        ops.append(AugmentOp("hflip"))
    if rng.random() < 0.5:
        ops.append(AugmentOp("vflip"))
    ops.append(AugmentOp("shift",
                         dx=float(rng.uniform(-MAX_SHIFT, MAX_SHIFT)),
                         dy=float(rng.uniform(-MAX_SHIFT, MAX_SHIFT))))
    ops.append(AugmentOp("rotate",
                         theta_deg=float(rng.uniform(-MAX_ROTATE_DEG,
                                                     MAX_ROTATE_DEG))))
    return ops


def augment_chain(sample, ops, suffix):
    out = sample
    for i, op in enumerate(ops):
        out = augment(out, op, suffix if i == len(ops) - 1 else "")
    return out
