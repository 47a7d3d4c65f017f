"""RBF-kernel support vector machine trained by sequential minimal
optimization, with one-vs-rest multiclass and Platt probability scaling."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .common import decode_classes, encode_classes


@dataclass(frozen=True)
class SvmParams:
    C: float = 50.0
    gamma: float = 1e-3
    probability: bool = True
    tol: float = 1e-3
    max_iter: int = 100_000

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


def rbf_kernel(a, b, gamma):
    """exp(-gamma * ||a_i - b_j||^2) for all row pairs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] \
        - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def dual_objective(alpha, kernel, y):
    """The maximized SVM dual: sum(a) - 1/2 a^T Q a with Q = yy^T * K."""
    ay = alpha * y
    return alpha.sum() - 0.5 * ay @ kernel @ ay


def smo_solve(kernel, y, C, tol=1e-3, max_iter=100_000):
    """Two-variable SMO with maximal-violating-pair selection.

    kernel is the full Gram matrix, y in {-1,+1}. Returns (alpha, bias,
    iterations). Optimality: max over I_up of (y_i - f_i) exceeds the min
    over I_low by at most tol, where f is the biasless decision value.
    """
    n = len(y)
    y = np.asarray(y, dtype=np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - sum(a), so f_i*y_i - 1

    it = 0
    while it < max_iter:
        it += 1
        viol = -y * grad  # equals y_i - f_i
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        i = np.flatnonzero(up)[np.argmax(viol[up])]
        j = np.flatnonzero(low)[np.argmin(viol[low])]
        m, mm = viol[i], viol[j]
        if m - mm <= tol:
            break

        if y[i] != y[j]:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(C, C + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - C)
            hi = min(C, alpha[i] + alpha[j])
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if eta <= 0:
            eta = 1e-12  # degenerate pair; take a bounded step anyway
        # minimize over alpha_j along the constraint line
        f_i = (grad[i] + 1.0) * y[i]
        f_j = (grad[j] + 1.0) * y[j]
        new_j = alpha[j] + y[j] * ((f_i - y[i]) - (f_j - y[j])) / eta
        new_j = min(hi, max(lo, new_j))
        delta_j = new_j - alpha[j]
        if abs(delta_j) < 1e-14:
            break  # clipped to nothing; the pair cannot improve further
        delta_i = -y[i] * y[j] * delta_j
        alpha[i] += delta_i
        alpha[j] = new_j
        qi = y * y[i] * kernel[:, i]
        qj = y * y[j] * kernel[:, j]
        grad += qi * delta_i + qj * delta_j

    viol = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    hi_v = viol[up].max() if up.any() else 0.0
    lo_v = viol[low].min() if low.any() else 0.0
    bias = (hi_v + lo_v) / 2.0
    return alpha, bias, it


def fit_platt(decision, positive, max_iter=100, sigma=1e-12):
    """Newton fit of P(y=1|f) = 1/(1+exp(A f + B)) (Lin-Lin-Weng).

    Targets are the usual smoothed frequencies, so the sigmoid stays
    finite even on separable data.
    """
    f = np.asarray(decision, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(f) - n_pos
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(positive, hi, lo)

    def objective(a, b):
        z = a * f + b
        pos_z = z >= 0
        return float(np.sum(np.where(pos_z,
                                     t * z + np.log1p(np.exp(-z)),
                                     (t - 1.0) * z + np.log1p(np.exp(z)))))

    a, b = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(a, b)
    for _ in range(max_iter):
        z = a * f + b
        with np.errstate(over="ignore"):
            p = np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)),
                         1.0 / (1 + np.exp(z)))
        q = 1.0 - p
        d1 = t - p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        pq = p * q
        h11 = float(np.sum(f * f * pq)) + sigma
        h22 = float(np.sum(pq)) + sigma
        h21 = float(np.sum(f * pq))
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            new_a, new_b = a + step * da, b + step * db
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            break  # line search failed; accept the current point
    return a, b


def platt_probability(decision, a, b):
    z = a * np.asarray(decision, dtype=np.float64) + b
    with np.errstate(over="ignore"):
        return np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)),
                        1.0 / (1 + np.exp(z)))


class BinarySvm:
    """One trained machine: support vectors, dual coefficients, bias."""

    def __init__(self, support_vectors, coef, bias, gamma, platt=None):
        self.support_vectors = support_vectors  # (m, d)
        self.coef = coef  # alpha_i * y_i, (m,)
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.platt = platt  # (A, B) or None

    def decision(self, rows):
        k = rbf_kernel(np.asarray(rows, dtype=np.float64),
                       self.support_vectors, self.gamma)
        return k @ self.coef + self.bias


class SvmModel:
    """One-vs-rest ensemble over a dense class vocabulary."""

    def __init__(self, machines, classes, params):
        self.machines = machines
        self.classes = list(classes)
        self.params = params
        self.n_features = machines[0].support_vectors.shape[1]

    def _check(self, rows):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValueError(
                f"expected (n,{self.n_features}) rows, got {rows.shape}")
        return rows

    def decision_values(self, rows):
        rows = self._check(rows)
        return np.column_stack([m.decision(rows) for m in self.machines])

    def predict_proba(self, rows):
        if not self.params.probability:
            raise ValueError("model was trained without probability estimates")
        values = self.decision_values(rows)
        raw = np.column_stack([
            platt_probability(values[:, i], *m.platt)
            for i, m in enumerate(self.machines)])
        raw = np.maximum(raw, 1e-300)
        return raw / raw.sum(axis=1, keepdims=True)

    def predict(self, rows):
        scores = self.predict_proba(rows) if self.params.probability \
            else self.decision_values(rows)
        return np.asarray(self.classes)[np.argmax(scores, axis=1)]

    def to_payload(self):
        kind, values = encode_classes(self.classes)
        meta = {
            "class_kind": kind,
            "classes": values,
            "params": asdict(self.params),
            "platt": [list(m.platt) if m.platt is not None else None
                      for m in self.machines],
        }
        tensors = {}
        for i, machine in enumerate(self.machines):
            tensors[f"machine{i}.support_vectors"] = machine.support_vectors
            tensors[f"machine{i}.coef"] = machine.coef
            tensors[f"machine{i}.bias"] = np.array([machine.bias])
        return meta, tensors

    @classmethod
    def from_payload(cls, meta, tensors):
        params = SvmParams(**meta["params"])
        classes = decode_classes(meta["class_kind"], meta["classes"])
        machines = []
        for i, platt in enumerate(meta["platt"]):
            machines.append(BinarySvm(
                tensors[f"machine{i}.support_vectors"].copy(),
                tensors[f"machine{i}.coef"].copy(),
                float(tensors[f"machine{i}.bias"][0]),
                params.gamma,
                tuple(platt) if platt is not None else None))
        return cls(machines, classes, params)


def svm_train(rows, labels, params=None, seed=0):
    """Train a one-vs-rest RBF SVM with SMO on each binary problem."""
    params = params or SvmParams()
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    kernel = rbf_kernel(rows, rows, params.gamma)
    machines = []
    for c in classes:
        y = np.where(labels == c, 1.0, -1.0)
        alpha, bias, _ = smo_solve(kernel, y, params.C, params.tol,
                                   params.max_iter)
        platt = None
        if params.probability:
            decision = kernel @ (alpha * y) + bias
            platt = fit_platt(decision, labels == c)
        keep = alpha > 1e-12
        machines.append(BinarySvm(rows[keep], (alpha * y)[keep], bias,
                                  params.gamma, platt))
    return SvmModel(machines, classes, params)
