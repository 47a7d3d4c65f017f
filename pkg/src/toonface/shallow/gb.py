"""Gradient boosting with multinomial deviance and depth-bounded
regression trees fit to per-class residuals."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .common import decode_classes, encode_classes


@dataclass(frozen=True)
class GbParams:
    shrinkage: float = 0.08
    max_depth: int = 3
    stages: int = 100

    def __post_init__(self):
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage must be in (0,1], got {self.shrinkage}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")


def _best_split(X, residual, indices):
    """Variance-reduction split over midpoint thresholds.

    Ties break deterministically: first by feature index, then by lower
    threshold (strict improvement required to replace the incumbent).
    """
    values = residual[indices]
    n = len(indices)
    if n < 2 or np.ptp(values) == 0.0:
        return None
    parent_sse = float(((values - values.mean()) ** 2).sum())
    best = None
    best_gain = 0.0
    for feature in range(X.shape[1]):
        col = X[indices, feature]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_val = values[order]
        # prefix sums give each candidate split's SSE in O(1)
        csum = np.cumsum(sorted_val)
        csq = np.cumsum(sorted_val ** 2)
        total, total_sq = csum[-1], csq[-1]
        distinct = np.nonzero(np.diff(sorted_col) > 0)[0]
        for cut in distinct:
            left_n = cut + 1
            right_n = n - left_n
            left_sse = csq[cut] - csum[cut] ** 2 / left_n
            right_sum = total - csum[cut]
            right_sse = (total_sq - csq[cut]) - right_sum ** 2 / right_n
            gain = parent_sse - (left_sse + right_sse)
            if gain > best_gain + 1e-12:
                threshold = (sorted_col[cut] + sorted_col[cut + 1]) / 2.0
                best = (feature, float(threshold))
                best_gain = gain
    return best


class RegressionTree:
    """Nodes stored as parallel arrays: feature, threshold, left, right,
    value, is_leaf. Rows go left when x[feature] <= threshold."""

    def __init__(self, nodes=None):
        self.nodes = nodes if nodes is not None else np.zeros((0, 6))

    def fit(self, X, residual, max_depth):
        rows = []
        leaf_members = {}

        def build(indices, depth):
            node_id = len(rows)
            rows.append([0.0, 0.0, -1.0, -1.0, 0.0, 1.0])
            split = _best_split(X, residual, indices) if depth < max_depth else None
            if split is None:
                leaf_members[node_id] = indices
                return node_id
            feature, threshold = split
            go_left = X[indices, feature] <= threshold
            left = build(indices[go_left], depth + 1)
            right = build(indices[~go_left], depth + 1)
            rows[node_id] = [float(feature), threshold, float(left),
                             float(right), 0.0, 0.0]
            return node_id

        build(np.arange(len(X)), 0)
        self.nodes = np.array(rows)
        return leaf_members

    def set_leaf_values(self, leaf_values):
        for node_id, value in leaf_values.items():
            self.nodes[node_id, 4] = value

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = 0
            while not self.nodes[node, 5]:
                feature = int(self.nodes[node, 0])
                node = int(self.nodes[node, 2]) if row[feature] <= self.nodes[node, 1] \
                    else int(self.nodes[node, 3])
            out[i] = self.nodes[node, 4]
        return out


class GbModel:
    """Staged additive model over a dense class vocabulary."""

    def __init__(self, classes, priors, trees, params):
        self.classes = list(classes)
        self.priors = np.asarray(priors, dtype=np.float64)  # log priors
        self.trees = trees  # list of stages, each a list of K trees
        self.params = params
        self.train_deviance = []

    def staged_scores(self, rows, stages=None):
        """Raw per-class scores after the given number of stages.

        Zero stages gives the log-prior initialization.
        """
        rows = np.asarray(rows, dtype=np.float64)
        if stages is None:
            stages = len(self.trees)
        if not 0 <= stages <= len(self.trees):
            raise ValueError(
                f"stages must be in [0,{len(self.trees)}], got {stages}")
        scores = np.tile(self.priors, (len(rows), 1))
        for stage in self.trees[:stages]:
            for k, tree in enumerate(stage):
                scores[:, k] += self.params.shrinkage * tree.predict(rows)
        return scores

    def predict_proba(self, rows, stages=None):
        return _softmax(self.staged_scores(rows, stages))

    def predict(self, rows, stages=None):
        proba = self.predict_proba(rows, stages)
        return np.asarray(self.classes)[np.argmax(proba, axis=1)]

    def to_payload(self):
        kind, values = encode_classes(self.classes)
        meta = {
            "class_kind": kind,
            "classes": values,
            "params": asdict(self.params),
            "n_stages": len(self.trees),
        }
        tensors = {"priors": self.priors,
                   "train_deviance": np.asarray(self.train_deviance,
                                                dtype=np.float64)}
        for s, stage in enumerate(self.trees):
            for k, tree in enumerate(stage):
                tensors[f"stage{s}.class{k}"] = tree.nodes
        return meta, tensors

    @classmethod
    def from_payload(cls, meta, tensors):
        params = GbParams(**meta["params"])
        classes = decode_classes(meta["class_kind"], meta["classes"])
        trees = [[RegressionTree(tensors[f"stage{s}.class{k}"].copy())
                  for k in range(len(classes))]
                 for s in range(meta["n_stages"])]
        model = cls(classes, tensors["priors"].copy(), trees, params)
        model.train_deviance = [float(v) for v in tensors["train_deviance"]]
        return model


def _softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _deviance(proba, y_index):
    picked = np.maximum(proba[np.arange(len(y_index)), y_index], 1e-300)
    return float(-np.mean(np.log(picked)))


def gb_train(rows, labels, params=None, seed=0):
    """Fit the boosted model: per stage, one residual tree per class.

    Leaf values take the single Newton step
    ((K-1)/K) * sum(residual) / sum(p*(1-p)) over the leaf's rows.
    """
    params = params or GbParams()
    X = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    k = len(classes)
    if k < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    y_index = np.array([index[c] for c in labels])
    one_hot = np.zeros((len(X), k))
    one_hot[np.arange(len(X)), y_index] = 1.0

    priors = np.log(np.bincount(y_index, minlength=k) / len(X))
    scores = np.tile(priors, (len(X), 1))
    model = GbModel(classes, priors, [], params)

    for _ in range(params.stages):
        proba = _softmax(scores)
        stage = []
        for c in range(k):
            residual = one_hot[:, c] - proba[:, c]
            tree = RegressionTree()
            leaf_members = tree.fit(X, residual, params.max_depth)
            leaf_values = {}
            for node_id, members in leaf_members.items():
                numer = residual[members].sum()
                denom = (proba[members, c] * (1.0 - proba[members, c])).sum()
                value = 0.0 if denom <= 0 else \
                    ((k - 1.0) / k) * numer / denom
                leaf_values[node_id] = value
            tree.set_leaf_values(leaf_values)
            scores[:, c] += params.shrinkage * tree.predict(X)
            stage.append(tree)
        model.trees.append(stage)
        model.train_deviance.append(_deviance(_softmax(scores), y_index))
    return model
