"""Reverse-mode autodiff over dense float64 arrays.

A Tensor wraps a numpy array together with the tape entry that produced
it. Calling :func:`backward` on a scalar loss walks the tape in reverse
topological order and accumulates gradients into every leaf (Parameters
and plain input Tensors). Intermediate gradients live only for the
duration of the sweep, so running backward twice on fresh graphs adds
into leaf gradients instead of overwriting them.
"""

from __future__ import annotations

import numpy as np


class EngineError(Exception):
    """Raised for misuse of the tensor engine."""


class ShapeError(EngineError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    """Dense n-dimensional float64 array tracked on the autodiff tape.

    ``parents`` and ``backward_fn`` are set by the ops that create
    intermediate results; user-created tensors are leaves.
    ``backward_fn(grad)`` must return one gradient array (or None) per
    parent, aligned with ``parents``.
    """

    __slots__ = ("data", "grad", "_parents", "_backward_fn")

    def __init__(self, data, parents=(), backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._backward_fn = backward_fn

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def is_leaf(self):
        return self._backward_fn is None

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar, got shape {self.data.shape}")
        return float(self.data.reshape(()))

    # Small arithmetic surface, enough to combine losses.
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, scalar):
        return scale(self, scalar)

    def __rmul__(self, scalar):
        return scale(self, scalar)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Parameter(Tensor):
    """Trainable leaf tensor with a unique name.

    The gradient is None until the first backward pass touches it;
    ``zero_grad`` makes it an explicit zero array of matching shape.
    """

    __slots__ = ("name",)

    def __init__(self, data, name):
        super().__init__(data)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def backward(loss):
    """Propagate gradients from a scalar loss to every leaf tensor.

    Rejects tensors that were not produced by a recorded forward pass,
    since there would be nothing to differentiate through.
    """
    if not isinstance(loss, Tensor):
        raise EngineError("backward expects a Tensor")
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if loss.is_leaf():
        raise EngineError("backward called before any forward pass was recorded")
    if not np.isfinite(loss.data).all():
        raise EngineError("loss is not finite")

    topo = _toposort(loss)
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf():
            node.accumulate_grad(g)
            continue
        parent_grads = node._backward_fn(g)
        for parent, pg in zip(node._parents, parent_grads):
            if pg is None:
                continue
            slot = grads.get(id(parent))
            if slot is None:
                grads[id(parent)] = pg.copy() if pg.base is not None else pg
            else:
                slot += pg


def _toposort(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def zero_gradients(params):
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# Elementwise / structural ops
# ---------------------------------------------------------------------------

def add(a, b):
    """Elementwise sum of two same-shape tensors."""
    if not isinstance(b, Tensor):
        b = Tensor(np.full_like(a.data, float(b)))
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add shapes differ: {a.data.shape} vs {b.data.shape}")
    # second copy keeps the two gradient slots from aliasing one buffer
    return Tensor(a.data + b.data, (a, b), lambda g: (g, g.copy()))


def scale(a, s):
    """Multiply a tensor by a python scalar."""
    s = float(s)
    return Tensor(a.data * s, (a,), lambda g: (g * s,))


def weighted_sum(x, weights):
    """Scalar projection sum(x * weights) with fixed (non-learned) weights.

    Reduces any tensor to a scalar, which is what backward() accepts;
    gradient checks project layer outputs through this.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != x.data.shape:
        raise ShapeError(f"weights shape {w.shape} != tensor {x.data.shape}")
    return Tensor(np.asarray(np.sum(x.data * w)), (x,), lambda g: (g * w,))


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(
            f"matmul needs (N,D)@(D,K), got {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def back(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor(out, (a, b), back)


def add_rowvec(x, b):
    """Add a length-K vector to every row of an (N, K) tensor."""
    if x.data.ndim != 2 or b.data.ndim != 1 or x.data.shape[1] != b.data.shape[0]:
        raise ShapeError(
            f"add_rowvec needs (N,K)+(K,), got {x.data.shape} + {b.data.shape}")
    return Tensor(x.data + b.data, (x, b), lambda g: (g, g.sum(axis=0)))


def reshape(x, shape):
    in_shape = x.data.shape
    out = x.data.reshape(shape)
    return Tensor(out, (x,), lambda g: (g.reshape(in_shape),))


def flatten(x):
    """Collapse all non-batch axes, keeping row-major order."""
    n = x.data.shape[0]
    return reshape(x, (n, -1))


def concat(parts, axis=1):
    """Column-wise concatenation; backward splits by the same offsets."""
    parts = list(parts)
    if not parts:
        raise ShapeError("concat needs at least one part")
    batch = parts[0].data.shape[0]
    for p in parts:
        if p.data.ndim != 2:
            raise ShapeError(f"concat expects 2-d parts, got shape {p.data.shape}")
        if p.data.shape[0] != batch:
            raise ShapeError(
                f"concat batch mismatch: {batch} vs {p.data.shape[0]}")
    if axis != 1:
        raise ShapeError("concat supports axis=1 only")
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def back(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(parts)))

    return Tensor(np.concatenate([p.data for p in parts], axis=1), parts, back)


def leaky_relu(x, slope=0.01):
    """x for x >= 0 else slope*x; the kink at 0 takes gradient 1."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must be in (0,1), got {slope}")
    mask = x.data >= 0.0
    out = np.where(mask, x.data, slope * x.data)
    return Tensor(out, (x,), lambda g: (np.where(mask, g, slope * g),))


def softmax(x, axis=1):
    """Row-stable softmax with the exact Jacobian-vector backward."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        dot = (g * p).sum(axis=axis, keepdims=True)
        return (p * (g - dot),)

    return Tensor(p, (x,), back)


def dropout(x, rate, mode, rng):
    """Inverted dropout: train zeros with probability ``rate`` and scales
    survivors by 1/(1-rate); infer is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0,1), got {rate}")
    if mode == "infer" or rate == 0.0:
        return Tensor(x.data.copy(), (x,), lambda g: (g,))
    if mode != "train":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise EngineError("train-mode dropout needs an rng")
    keep = rng.random(x.data.shape) >= rate
    factor = 1.0 / (1.0 - rate)
    out = np.where(keep, x.data * factor, 0.0)
    return Tensor(out, (x,), lambda g: (np.where(keep, g * factor, 0.0),))
