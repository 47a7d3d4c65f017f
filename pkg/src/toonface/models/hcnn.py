"""Two-headed hierarchical CNN recognizer.

Four conv+pool stacks feed two dense layers and an auxiliary softmax
head; the main branch classifies the concatenation of the second dense
output, a shortcut copy of the flattened final conv activations, and the
30-value landmark vector. The auxiliary loss joins the total at a 0.60
discount. Auxiliary-head parameters step with Nesterov SGD on a plateau
schedule; everything else with Adam.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..engine import (
    Adam,
    BatchNorm,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2d,
    PlateauSchedule,
    SgdNesterov,
    Tensor,
    add,
    backward,
    concat,
    flatten,
    leaky_relu,
    scale,
    softmax_cross_entropy,
    zero_gradients,
)
from .common import TrainingError, TrainRun, convergence_epoch, minibatches, spawn_rng

FRAME = 96
LANDMARK_WIDTH = 30
AUX_DISCOUNT = 0.60


@dataclass(frozen=True)
class HcnnConfig:
    num_classes: int
    conv_shapes: tuple = ((4, 4), (3, 3), (2, 2), (1, 1))
    conv_filters: tuple = (32, 64, 128, 256)
    fc_widths: tuple = (512, 256)
    main_widths: tuple = (512, 128)
    dropout_rate: float = 0.5
    leaky_slope: float = 0.01
    aux_discount: float = AUX_DISCOUNT
    shortcut: bool = True
    batch_norm: bool = True
    dense_batch_norm: bool = True

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        shapes = tuple(tuple(s) for s in self.conv_shapes)
        object.__setattr__(self, "conv_shapes", shapes)
        object.__setattr__(self, "conv_filters", tuple(self.conv_filters))
        object.__setattr__(self, "fc_widths", tuple(self.fc_widths))
        object.__setattr__(self, "main_widths", tuple(self.main_widths))
        if len(shapes) != 4 or len(self.conv_filters) != 4:
            raise ValueError("exactly four conv stacks required")
        if shapes[0] != (4, 4) or shapes[-1] != (1, 1):
            raise ValueError("first conv must be (4,4) and last (1,1)")
        if len(self.fc_widths) != 2 or len(self.main_widths) != 2:
            raise ValueError("two widths each for the fc and main branches")
        if any(w < 1 for w in self.conv_filters + self.fc_widths
               + self.main_widths):
            raise ValueError("layer widths must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        if self.aux_discount < 0.0:
            raise ValueError("aux discount must be nonnegative")


def spatial_trace(config, side=FRAME):
    """Per-layer spatial sizes under valid conv and (2,2) floor pooling."""
    trace = [side]
    for kh, _ in config.conv_shapes:
        side = side - kh + 1
        trace.append(side)
        side = side // 2
        trace.append(side)
    if side < 1:
        raise ValueError("input too small for the conv stack")
    return trace


def hcnn_loss(main_loss, aux_loss, discount=AUX_DISCOUNT):
    """Total training loss: main plus the discounted auxiliary term."""
    main_loss = float(main_loss)
    aux_loss = float(aux_loss)
    if not (np.isfinite(main_loss) and np.isfinite(aux_loss)):
        raise ValueError("losses must be finite")
    if main_loss < 0 or aux_loss < 0:
        raise ValueError("losses must be nonnegative")
    return main_loss + discount * aux_loss


def landmark_features(landmarks, means=None):
    """(N,15,2) coordinate arrays to imputed, scaled (N,30) inputs.

    Missing coordinates take the training-set column mean (computed here
    when means is None); a column with no data anywhere falls back to the
    frame center. Values then scale by (v - 48) / 48.
    """
    flat = np.asarray(landmarks, dtype=np.float64).reshape(len(landmarks), -1)
    if flat.shape[1] != LANDMARK_WIDTH:
        raise ValueError(f"expected {LANDMARK_WIDTH} landmark values per "
                         f"sample, got {flat.shape[1]}")
    if means is None:
        present = np.isfinite(flat)
        counts = present.sum(axis=0)
        sums = np.where(present, flat, 0.0).sum(axis=0)
        means = np.where(counts > 0, sums / np.maximum(counts, 1), 48.0)
    means = np.asarray(means, dtype=np.float64)
    filled = np.where(np.isfinite(flat), flat, means)
    return (filled - 48.0) / 48.0, means


class Hcnn:
    def __init__(self, config, seed=0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        slope = config.leaky_slope

        self.convs, self.conv_bns = [], []
        in_channels = 1
        for i, (shape, filters) in enumerate(zip(config.conv_shapes,
                                                 config.conv_filters), 1):
            self.convs.append(Conv2d(in_channels, filters, shape, rng,
                                     f"conv{i}"))
            self.conv_bns.append(BatchNorm(filters, f"conv{i}.bn")
                                 if config.batch_norm else None)
            in_channels = filters
        self.pool = MaxPool2d((2, 2))
        self.slope = slope

        side = spatial_trace(config)[-1]
        self.flat_width = side * side * config.conv_filters[-1]

        def dense_with_bn(in_w, out_w, name):
            layer = Dense(in_w, out_w, rng, name, "linear")
            bn = BatchNorm(out_w, f"{name}.bn") if config.dense_batch_norm else None
            return layer, bn

        self.fc1, self.fc1_bn = dense_with_bn(self.flat_width,
                                              config.fc_widths[0], "fc1")
        self.fc2, self.fc2_bn = dense_with_bn(config.fc_widths[0],
                                              config.fc_widths[1], "fc2")
        # class heads stay BN-free so logits are unconstrained
        self.aux_head = Dense(config.fc_widths[1], config.num_classes, rng,
                              "aux_head", "linear")

        main_in = config.fc_widths[1] + LANDMARK_WIDTH
        if config.shortcut:
            main_in += self.flat_width
        self.main_in_width = main_in
        self.main1, self.main1_bn = dense_with_bn(main_in,
                                                  config.main_widths[0],
                                                  "main1")
        self.main2, self.main2_bn = dense_with_bn(config.main_widths[0],
                                                  config.main_widths[1],
                                                  "main2")
        self.drop = Dropout(config.dropout_rate)
        self.main_head = Dense(config.main_widths[1], config.num_classes,
                               rng, "main_head", "linear")

    # parameter bookkeeping

    def aux_parameters(self):
        return self.aux_head.parameters()

    def trunk_parameters(self):
        params = []
        for conv, bn in zip(self.convs, self.conv_bns):
            params += conv.parameters()
            if bn is not None:
                params += bn.parameters()
        for layer, bn in ((self.fc1, self.fc1_bn), (self.fc2, self.fc2_bn),
                          (self.main1, self.main1_bn),
                          (self.main2, self.main2_bn)):
            params += layer.parameters()
            if bn is not None:
                params += bn.parameters()
        params += self.main_head.parameters()
        return params

    def parameters(self):
        return self.trunk_parameters() + self.aux_parameters()

    def buffers(self):
        out = {}
        for bn in self.conv_bns + [self.fc1_bn, self.fc2_bn, self.main1_bn,
                                   self.main2_bn]:
            if bn is not None:
                out.update(bn.buffers())
        return out

    def load_buffers(self, buffers):
        for bn in self.conv_bns + [self.fc1_bn, self.fc2_bn, self.main1_bn,
                                   self.main2_bn]:
            if bn is not None:
                bn.load_buffers(buffers)

    # forward

    def forward(self, pixels, landmarks, mode, dropout_rng=None):
        """Returns (main_logits, aux_logits) tensors for a batch."""
        x = pixels if isinstance(pixels, Tensor) else Tensor(pixels)
        lm = landmarks if isinstance(landmarks, Tensor) else Tensor(landmarks)
        for conv, bn in zip(self.convs, self.conv_bns):
            x = conv(x)
            if bn is not None:
                x = bn(x, mode)
            x = leaky_relu(x, self.slope)
            x = self.pool(x)
        flat = flatten(x)

        h = self.fc1(flat)
        if self.fc1_bn is not None:
            h = self.fc1_bn(h, mode)
        h = self.fc2(h)
        if self.fc2_bn is not None:
            h = self.fc2_bn(h, mode)
        aux_logits = self.aux_head(h)

        parts = [h]
        if self.config.shortcut:
            parts.append(flat)
        parts.append(lm)
        m = concat(parts, axis=1)
        m = self.main1(m)
        if self.main1_bn is not None:
            m = self.main1_bn(m, mode)
        m = self.main2(m)
        if self.main2_bn is not None:
            m = self.main2_bn(m, mode)
        m = self.drop(m, mode, dropout_rng)
        return self.main_head(m), aux_logits

    def losses(self, pixels, landmarks, one_hot, mode, dropout_rng=None):
        """(total, main, aux) loss tensors; total = main + discount*aux."""
        main_logits, aux_logits = self.forward(pixels, landmarks, mode,
                                               dropout_rng)
        main, _ = softmax_cross_entropy(main_logits, one_hot)
        aux, _ = softmax_cross_entropy(aux_logits, one_hot)
        return add(main, scale(aux, self.config.aux_discount)), main, aux

    def predict_proba(self, pixels, landmarks, batch_size=64):
        pixels = _as_image_batch(pixels)
        landmarks = np.asarray(landmarks, dtype=np.float64)
        out = []
        for start in range(0, len(pixels), batch_size):
            stop = start + batch_size
            logits, _ = self.forward(pixels[start:stop],
                                     landmarks[start:stop], "infer")
            out.append(_stable_softmax(logits.data))
        return np.concatenate(out, axis=0)

    # serialization

    def to_payload(self):
        config = asdict(self.config)
        config["conv_shapes"] = [list(s) for s in self.config.conv_shapes]
        for key in ("conv_filters", "fc_widths", "main_widths"):
            config[key] = list(config[key])
        tensors = {p.name: p.data for p in self.parameters()}
        tensors.update(self.buffers())
        return {"config": config, "seed": self.seed}, tensors

    @classmethod
    def from_payload(cls, meta, tensors):
        raw = dict(meta["config"])
        raw["conv_shapes"] = tuple(tuple(s) for s in raw["conv_shapes"])
        model = cls(HcnnConfig(**raw), seed=meta.get("seed", 0))
        for param in model.parameters():
            stored = tensors[param.name]
            if stored.shape != param.data.shape:
                raise ValueError(f"{param.name}: stored shape {stored.shape} "
                                 f"does not match {param.data.shape}")
            param.data = stored.copy()
        model.load_buffers(tensors)
        return model


def _as_image_batch(pixels):
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim == 3:
        pixels = pixels[:, None, :, :]
    if pixels.ndim != 4 or pixels.shape[1] != 1:
        raise ValueError("expected pixels shaped (N, 96, 96) or (N, 1, 96, 96)")
    return pixels


def _stable_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(labels, num_classes):
    labels = np.asarray(labels)
    out = np.zeros((len(labels), num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


@dataclass
class ClassifierData:
    """Pixel batch, imputed+scaled landmark inputs, integer labels."""
    pixels: np.ndarray
    landmarks: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.pixels = _as_image_batch(self.pixels)
        self.landmarks = np.asarray(self.landmarks, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.landmarks.shape != (len(self.pixels), LANDMARK_WIDTH):
            raise ValueError("landmark inputs must be (N, 30)")
        if self.labels.shape != (len(self.pixels),):
            raise ValueError("labels must be one integer per sample")
        if not np.all(np.isfinite(self.landmarks)):
            raise ValueError("landmark inputs must be imputed before training")
        if len(self.pixels) == 0:
            raise TrainingError("empty dataset")

    def __len__(self):
        return len(self.pixels)


def ranked_predictions(model, pixels, landmarks, k=None):
    """Top-k class indices and probabilities, ties broken by class index."""
    probs = model.predict_proba(pixels, landmarks)
    num_classes = probs.shape[1]
    if k is None:
        k = num_classes
    if not 1 <= k <= num_classes:
        raise ValueError(f"k must be in [1, {num_classes}], got {k}")
    order = np.argsort(-probs, axis=1, kind="stable")
    ranked_probs = np.take_along_axis(probs, order, axis=1)
    return order[:, :k], ranked_probs[:, :k]


def _log_mean_nll(logits, labels):
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return -float(np.mean(log_probs[np.arange(len(labels)), labels]))


def _evaluate(model, data, batch_size=64):
    """Infer-mode total/main/aux losses and accuracy over a dataset."""
    discount = model.config.aux_discount
    main_sum = aux_sum = 0.0
    correct = 0
    n = len(data)
    for start in range(0, n, batch_size):
        stop = start + batch_size
        main_logits, aux_logits = model.forward(data.pixels[start:stop],
                                                data.landmarks[start:stop],
                                                "infer")
        labels = data.labels[start:stop]
        weight = len(labels)
        main_sum += weight * _log_mean_nll(main_logits.data, labels)
        aux_sum += weight * _log_mean_nll(aux_logits.data, labels)
        correct += int(np.sum(np.argmax(main_logits.data, axis=1) == labels))
    main = main_sum / n
    aux = aux_sum / n
    return main + discount * aux, main, aux, correct / n


def train_hcnn(model, train_data, val_data=None, batch_size=32,
               max_epochs=1000, seed=0, adam_lr=0.001, sgd_lr=0.2,
               early_stop_after=None, stop_at_train_accuracy=None):
    """Train in place; returns the TrainRun record.

    The combined loss backpropagates through the whole graph each step;
    auxiliary-head parameters are then stepped by Nesterov SGD (plateau
    learning-rate schedule watching the auxiliary validation loss) and
    all remaining parameters by Adam.
    """
    if max_epochs < 1:
        raise ValueError("max_epochs must be >= 1")
    if len(train_data) == 0:
        raise TrainingError("empty dataset")
    num_classes = model.config.num_classes
    if train_data.labels.max() >= num_classes or train_data.labels.min() < 0:
        raise TrainingError("labels outside the configured class range")

    shuffle_rng = spawn_rng(seed, 0)
    dropout_rng = spawn_rng(seed, 1)
    adam = Adam(model.trunk_parameters(), lr=adam_lr)
    sgd = SgdNesterov(model.aux_parameters(), lr=sgd_lr)
    schedule = PlateauSchedule(sgd_lr)
    all_params = model.parameters()
    one_hot = _one_hot(train_data.labels, num_classes)
    run = TrainRun(seed=seed, batch_size=batch_size, max_epochs=max_epochs)
    watched = []
    stale = 0
    best_watched = None

    for epoch in range(1, max_epochs + 1):
        for batch in minibatches(len(train_data), batch_size, shuffle_rng):
            zero_gradients(all_params)
            total, main, aux = model.losses(train_data.pixels[batch],
                                            train_data.landmarks[batch],
                                            one_hot[batch], "train",
                                            dropout_rng)
            if not np.isfinite(total.data):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} (main={main.data!r}, "
                    f"aux={aux.data!r})")
            backward(total)
            adam.step()
            sgd.step()
            run.step_losses.append((float(total.data), float(main.data),
                                    float(aux.data)))

        train_total, _, train_aux, train_acc = _evaluate(model, train_data)
        run.train_losses.append(train_total)
        run.train_metrics.append(train_acc)
        if val_data is not None:
            val_total, val_main, val_aux, val_acc = _evaluate(model, val_data)
            run.val_losses.append(val_total)
            run.main_val_losses.append(val_main)
            run.aux_val_losses.append(val_aux)
            run.val_metrics.append(val_acc)
            aux_watch, total_watch = val_aux, val_total
        else:
            aux_watch, total_watch = train_aux, train_total
        sgd.lr = schedule.update(aux_watch)
        run.learning_rates.append(sgd.lr)
        run.epochs_run = epoch

        watched.append(total_watch)
        if best_watched is None or best_watched - total_watch > 1e-4:
            best_watched = (total_watch if best_watched is None
                            else min(best_watched, total_watch))
            stale = 0
        else:
            best_watched = min(best_watched, total_watch)
            stale += 1
        if stop_at_train_accuracy is not None \
                and train_acc >= stop_at_train_accuracy:
            break
        if early_stop_after is not None and stale >= early_stop_after:
            break

    run.convergence_epoch = convergence_epoch(watched)
    return run
