"""Quality measures: macro precision/recall/F1, accuracy, top-k error,
landmark RMSE, and image-level detection rates with IoU matching."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


def confusion_matrix(truths, predictions, num_classes):
    """K x K counts, rows = true class, columns = predicted class."""
    truths = np.asarray(truths)
    predictions = np.asarray(predictions)
    if truths.shape != predictions.shape or truths.ndim != 1:
        raise ValueError("truths and predictions must be matching 1-d arrays")
    if num_classes < 1:
        raise ValueError("num_classes must be positive")
    for name, arr in (("truth", truths), ("prediction", predictions)):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise ValueError(f"{name} labels outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (truths, predictions), 1)
    return counts


def _check_confusion(confusion):
    counts = np.asarray(confusion)
    if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
        raise ValueError("confusion matrix must be square")
    if counts.size == 0 or counts.sum() == 0:
        raise ValueError("confusion matrix has no samples")
    if np.any(counts < 0):
        raise ValueError("confusion matrix counts must be nonnegative")
    return counts


def accuracy(confusion):
    counts = _check_confusion(confusion)
    return float(np.trace(counts) / counts.sum())


def macro_prf(confusion, combine_after_averaging=False):
    """Unweighted per-class means of precision, recall and F1.

    All 0/0 ratios collapse to 0 so a class that is never predicted and
    never true contributes (0, 0, 0) instead of inflating the averages.
    `combine_after_averaging` switches the F score to the alternative
    reading: the harmonic mean of macro-P and macro-R.
    """
    counts = _check_confusion(confusion).astype(np.float64)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    precision = np.divide(tp, tp + fp, out=np.zeros_like(tp),
                          where=tp + fp > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros_like(tp),
                       where=tp + fn > 0)
    both = precision + recall
    f1 = np.divide(2 * precision * recall, both, out=np.zeros_like(tp),
                   where=both > 0)
    macro_p = float(precision.mean())
    macro_r = float(recall.mean())
    if combine_after_averaging:
        macro_f = (0.0 if macro_p + macro_r == 0
                   else 2 * macro_p * macro_r / (macro_p + macro_r))
    else:
        macro_f = float(f1.mean())
    return macro_p, macro_r, macro_f


def topk_error(ranked, truths, k):
    """Fraction of samples whose true class misses the first k ranks.

    `ranked` holds one descending-probability label list per sample; the
    caller's model is responsible for its own tie-break ordering.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    truths = list(truths)
    if len(ranked) != len(truths):
        raise ValueError("ranked predictions and truths differ in length")
    if not truths:
        raise ValueError("no samples to evaluate")
    wrong = sum(1 for row, t in zip(ranked, truths) if t not in list(row)[:k])
    return wrong / len(truths)


def landmark_rmse(predicted, truth):
    """Root mean squared coordinate error in pixels.

    Only coordinates present in the truth enter the mean; whatever the
    prediction marks missing is irrelevant as long as it supplies values
    where the truth has them.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predicted.shape != truth.shape:
        raise ValueError("prediction and truth shapes differ")
    mask = np.isfinite(truth)
    if not np.any(mask):
        raise ValueError("no present coordinates to evaluate")
    if not np.all(np.isfinite(predicted[mask])):
        raise ValueError("prediction is missing a coordinate the truth "
                         "provides")
    diff = predicted[mask] - truth[mask]
    return float(np.sqrt(np.mean(diff * diff)))


def iou(a, b):
    """Intersection over union of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = (float(v) for v in a)
    bx, by, bw, bh = (float(v) for v in b)
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError("boxes need positive width and height")
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class DetectionResult:
    tpr: float
    fpr: float
    fnr: float
    verdicts: dict = field(default_factory=dict)  # image_id -> "TP"/"FP"/"FN"
    skipped: list = field(default_factory=list)   # ids without ground truth


def _image_verdict(truth_boxes, predicted_boxes, threshold):
    # greedy: repeatedly take the highest-IoU (prediction, truth) pair,
    # each side consumed at most once
    pairs = []
    for p, pred in enumerate(predicted_boxes):
        for t, true in enumerate(truth_boxes):
            score = iou(pred, true)
            if score >= threshold:
                pairs.append((score, p, t))
    pairs.sort(key=lambda item: (-item[0], item[1], item[2]))
    used_p, used_t = set(), set()
    for score, p, t in pairs:
        if p not in used_p and t not in used_t:
            used_p.add(p)
            used_t.add(t)
    if len(used_p) < len(predicted_boxes):
        return "FP"
    if used_t:
        return "TP"
    return "FN"


def detection_rates(truth_boxes, predicted_boxes, iou_threshold=0.5):
    """Image-level TP/FP/FN fractions with greedy IoU matching.

    Per image: every prediction must match a distinct ground-truth box at
    IoU >= threshold. Any unmatched prediction makes the image FP; else a
    single match suffices for TP; an image with no match at all is FN.
    Images without ground-truth boxes are excluded with a warning.
    """
    verdicts = {}
    skipped = []
    for image_id in sorted(truth_boxes):
        boxes = truth_boxes[image_id]
        if not boxes:
            skipped.append(image_id)
            continue
        predicted = list(predicted_boxes.get(image_id, []))
        verdicts[image_id] = _image_verdict(boxes, predicted, iou_threshold)
    for image_id in sorted(set(predicted_boxes) - set(truth_boxes)):
        skipped.append(image_id)
    if skipped:
        warnings.warn(f"{len(skipped)} image(s) without ground-truth boxes "
                      "excluded from detection rates", stacklevel=2)
    if not verdicts:
        raise ValueError("no images with ground truth to evaluate")
    n = len(verdicts)
    tally = {"TP": 0, "FP": 0, "FN": 0}
    for verdict in verdicts.values():
        tally[verdict] += 1
    return DetectionResult(tally["TP"] / n, tally["FP"] / n, tally["FN"] / n,
                           verdicts, skipped)


def format_report(values):
    """Human-readable metrics block: one aligned `name: value` per line."""
    if not values:
        return ""
    width = max(len(str(k)) for k in values)
    lines = []
    for key, value in values.items():
        shown = f"{value:.6f}" if isinstance(value, float) else str(value)
        lines.append(f"{str(key).ljust(width)}  {shown}")
    return "\n".join(lines) + "\n"


def save_results(path, values):
    """Machine-readable `key=value` results file, insertion-ordered."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in values.items():
            # float() first: numpy scalars pass isinstance but repr with
            # a type wrapper the loader could not read back
            shown = repr(float(value)) if isinstance(value, float) \
                else str(value)
            fh.write(f"{key}={shown}\n")


def load_results(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            try:
                values[key] = int(raw)
            except ValueError:
                try:
                    values[key] = float(raw)
                except ValueError:
                    values[key] = raw
    return values


def save_ranked_predictions(path, image_ids, ranked_labels, ranked_probs):
    """Rows of `image_id,class1,p1,class2,p2,...` without a header."""
    if not (len(image_ids) == len(ranked_labels) == len(ranked_probs)):
        raise ValueError("prediction list lengths differ")
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, labels, probs in zip(image_ids, ranked_labels,
                                           ranked_probs):
            if len(labels) != len(probs):
                raise ValueError(f"{image_id}: labels/probabilities differ "
                                 "in length")
            cells = [str(image_id)]
            for label, prob in zip(labels, probs):
                cells.append(str(label))
                cells.append(repr(float(prob)))
            fh.write(",".join(cells) + "\n")


def load_ranked_predictions(path):
    image_ids, ranked_labels, ranked_probs = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for row, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) < 3 or len(cells) % 2 == 0:
                raise ValueError(f"{path}: row {row}: expected an id plus "
                                 "class,probability pairs")
            image_ids.append(cells[0])
            labels = cells[1::2]
            try:
                probs = [float(c) for c in cells[2::2]]
            except ValueError as exc:
                raise ValueError(f"{path}: row {row}: bad probability") from exc
            if any(not np.isfinite(p) for p in probs):
                raise ValueError(f"{path}: row {row}: non-finite probability")
            if any(b - a > 1e-12 for a, b in zip(probs, probs[1:])):
                raise ValueError(f"{path}: row {row}: probabilities must be "
                                 "non-increasing")
            ranked_labels.append(labels)
            ranked_probs.append(probs)
    if not image_ids:
        raise ValueError(f"{path}: no prediction rows")
    return image_ids, ranked_labels, ranked_probs
