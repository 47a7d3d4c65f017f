"""Five-layer landmark regressor: three conv+pool stacks, one hidden
dense layer with dropout, and a 30-wide linear output head. Targets are
coordinates scaled to [-1, 1]; missing coordinates are masked out of the
squared-error loss element by element."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ..engine import (
    Adam,
    BatchNorm,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2d,
    Tensor,
    backward,
    flatten,
    leaky_relu,
    masked_squared_error,
    zero_gradients,
)
from .common import TrainingError, TrainRun, convergence_epoch, minibatches, spawn_rng
from .hcnn import FRAME, LANDMARK_WIDTH, _as_image_batch

TARGET_CENTER = 48.0
TARGET_SCALE = 48.0


@dataclass(frozen=True)
class LandmarkNetConfig:
    conv_shapes: tuple = ((4, 4), (3, 3), (2, 2))
    conv_filters: tuple = (16, 32, 64)
    hidden_width: int = 128
    dropout_rate: float = 0.5
    leaky_slope: float = 0.01
    batch_norm: bool = False

    def __post_init__(self):
        shapes = tuple(tuple(s) for s in self.conv_shapes)
        object.__setattr__(self, "conv_shapes", shapes)
        object.__setattr__(self, "conv_filters", tuple(self.conv_filters))
        if len(shapes) != 3 or len(self.conv_filters) != 3:
            raise ValueError("exactly three conv stacks required")
        if self.hidden_width < 1 or any(f < 1 for f in self.conv_filters):
            raise ValueError("layer widths must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")


def scale_targets(landmarks):
    """(N,15,2) coordinates to ((N,30) scaled targets, (N,30) mask).

    Missing coordinates become 0 with mask 0; present ones map through
    (coord - 48) / 48.
    """
    flat = np.asarray(landmarks, dtype=np.float64).reshape(len(landmarks), -1)
    if flat.shape[1] != LANDMARK_WIDTH:
        raise ValueError(f"expected {LANDMARK_WIDTH} target values per "
                         f"sample, got {flat.shape[1]}")
    mask = np.isfinite(flat).astype(np.float64)
    targets = np.where(mask > 0, (flat - TARGET_CENTER) / TARGET_SCALE, 0.0)
    return targets, mask


def unscale_predictions(scaled):
    """(N,30) network outputs back to (N,15,2) pixel coordinates."""
    scaled = np.asarray(scaled, dtype=np.float64)
    return (scaled * TARGET_SCALE + TARGET_CENTER).reshape(len(scaled), -1, 2)


class LandmarkNet:
    def __init__(self, config=None, seed=0):
        self.config = config or LandmarkNetConfig()
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.convs, self.conv_bns = [], []
        in_channels = 1
        for i, (shape, filters) in enumerate(zip(self.config.conv_shapes,
                                                 self.config.conv_filters), 1):
            self.convs.append(Conv2d(in_channels, filters, shape, rng,
                                     f"conv{i}"))
            self.conv_bns.append(BatchNorm(filters, f"conv{i}.bn")
                                 if self.config.batch_norm else None)
            in_channels = filters
        self.pool = MaxPool2d((2, 2))
        side = FRAME
        for kh, _ in self.config.conv_shapes:
            side = (side - kh + 1) // 2
        if side < 1:
            raise ValueError("input too small for the conv stack")
        self.flat_width = side * side * self.config.conv_filters[-1]
        self.hidden = Dense(self.flat_width, self.config.hidden_width, rng,
                            "hidden", "leaky_relu", self.config.leaky_slope)
        self.drop = Dropout(self.config.dropout_rate)
        self.out = Dense(self.config.hidden_width, LANDMARK_WIDTH, rng,
                         "out", "linear")

    def parameters(self):
        params = []
        for conv, bn in zip(self.convs, self.conv_bns):
            params += conv.parameters()
            if bn is not None:
                params += bn.parameters()
        return params + self.hidden.parameters() + self.out.parameters()

    def buffers(self):
        out = {}
        for bn in self.conv_bns:
            if bn is not None:
                out.update(bn.buffers())
        return out

    def load_buffers(self, buffers):
        for bn in self.conv_bns:
            if bn is not None:
                bn.load_buffers(buffers)

    def forward(self, pixels, mode, dropout_rng=None):
        x = pixels if isinstance(pixels, Tensor) else Tensor(pixels)
        for conv, bn in zip(self.convs, self.conv_bns):
            x = conv(x)
            if bn is not None:
                x = bn(x, mode)
            x = leaky_relu(x, self.config.leaky_slope)
            x = self.pool(x)
        h = self.hidden(flatten(x))
        h = self.drop(h, mode, dropout_rng)
        return self.out(h)

    def predict(self, pixels, batch_size=64):
        """Pixel-space (N,15,2) predictions in infer mode."""
        pixels = _as_image_batch(pixels)
        chunks = []
        for start in range(0, len(pixels), batch_size):
            out = self.forward(pixels[start:start + batch_size], "infer")
            chunks.append(out.data)
        return unscale_predictions(np.concatenate(chunks, axis=0))

    def to_payload(self):
        config = asdict(self.config)
        config["conv_shapes"] = [list(s) for s in self.config.conv_shapes]
        config["conv_filters"] = list(config["conv_filters"])
        tensors = {p.name: p.data for p in self.parameters()}
        tensors.update(self.buffers())
        return {"config": config, "seed": self.seed}, tensors

    @classmethod
    def from_payload(cls, meta, tensors):
        raw = dict(meta["config"])
        raw["conv_shapes"] = tuple(tuple(s) for s in raw["conv_shapes"])
        model = cls(LandmarkNetConfig(**raw), seed=meta.get("seed", 0))
        for param in model.parameters():
            stored = tensors[param.name]
            if stored.shape != param.data.shape:
                raise ValueError(f"{param.name}: stored shape {stored.shape} "
                                 f"does not match {param.data.shape}")
            param.data = stored.copy()
        model.load_buffers(tensors)
        return model


def _masked_rmse_px(model, pixels, targets, mask, batch_size=64):
    """Pixel RMSE over unmasked entries, computed in infer mode."""
    total_sq = 0.0
    count = 0
    for start in range(0, len(pixels), batch_size):
        stop = start + batch_size
        out = model.forward(pixels[start:stop], "infer").data
        m = mask[start:stop]
        diff = (out - targets[start:stop]) * m
        total_sq += float(np.sum(diff * diff))
        count += int(m.sum())
    if count == 0:
        raise TrainingError("no present coordinates to evaluate")
    return TARGET_SCALE * np.sqrt(total_sq / count)


def build_and_train_landmark_net(pixels, landmarks, val_pixels=None,
                                 val_landmarks=None, config=None, seed=0,
                                 batch_size=32, max_epochs=100, lr=0.001,
                                 early_stop_after=None):
    """Train a fresh regressor on masked scaled targets.

    Samples whose 30 targets are all missing are excluded with a warning.
    Returns (model, TrainRun); the run's metric lists carry pixel RMSE.
    """
    if max_epochs < 1:
        raise ValueError("max_epochs must be >= 1")
    pixels = _as_image_batch(pixels)
    targets, mask = scale_targets(landmarks)
    if len(pixels) != len(targets):
        raise ValueError("pixels and landmarks differ in length")
    usable = mask.sum(axis=1) > 0
    if not np.all(usable):
        warnings.warn(f"excluding {int((~usable).sum())} sample(s) with no "
                      "present landmark coordinates", stacklevel=2)
        pixels, targets, mask = pixels[usable], targets[usable], mask[usable]
    if len(pixels) == 0:
        raise TrainingError("empty dataset")

    model = LandmarkNet(config, seed=seed)
    shuffle_rng = spawn_rng(seed, 0)
    dropout_rng = spawn_rng(seed, 1)
    adam = Adam(model.parameters(), lr=lr)
    run = TrainRun(seed=seed, batch_size=batch_size, max_epochs=max_epochs)

    has_val = val_pixels is not None
    if has_val:
        val_pixels = _as_image_batch(val_pixels)
        val_targets, val_mask = scale_targets(val_landmarks)

    watched = []
    stale = 0
    best = None
    for epoch in range(1, max_epochs + 1):
        for batch in minibatches(len(pixels), batch_size, shuffle_rng):
            zero_gradients(model.parameters())
            out = model.forward(pixels[batch], "train", dropout_rng)
            loss = masked_squared_error(out, targets[batch], mask[batch])
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            backward(loss)
            adam.step()
            run.step_losses.append((float(loss.data),))

        train_rmse = _masked_rmse_px(model, pixels, targets, mask)
        run.train_losses.append((train_rmse / TARGET_SCALE) ** 2)
        run.train_metrics.append(train_rmse)
        if has_val:
            val_rmse = _masked_rmse_px(model, val_pixels, val_targets,
                                       val_mask)
            run.val_losses.append((val_rmse / TARGET_SCALE) ** 2)
            run.val_metrics.append(val_rmse)
            watch = run.val_losses[-1]
        else:
            watch = run.train_losses[-1]
        run.epochs_run = epoch
        watched.append(watch)
        if best is None or best - watch > 1e-4:
            best = watch if best is None else min(best, watch)
            stale = 0
        else:
            best = min(best, watch)
            stale += 1
        if early_stop_after is not None and stale >= early_stop_after:
            break

    run.convergence_epoch = convergence_epoch(watched)
    return model, run
