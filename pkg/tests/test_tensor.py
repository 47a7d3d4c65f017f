"""Autograd core: graph recording, backward, elementwise and structural ops."""

import numpy as np
import pytest

from toonface import engine as E

from util import fd_check, projection


# ---------------------------------------------------------------------------
# backward plumbing
# ---------------------------------------------------------------------------

def test_backward_rejects_leaf():
    t = E.Tensor(np.array(1.0))
    with pytest.raises(E.EngineError):
        E.backward(t)


def test_backward_rejects_nonscalar():
    x = E.Tensor(np.ones((2, 2)))
    y = E.scale(x, 2.0)
    with pytest.raises(E.ShapeError):
        E.backward(y)


def test_backward_rejects_nonfinite_loss():
    x = E.Tensor(np.array([np.inf]))
    y = E.reshape(E.scale(x, 1.0), ())
    with pytest.raises(E.EngineError):
        E.backward(y)


def test_constant_loss_zero_gradients():
    w = E.Parameter(np.array([[1.0, -2.0], [3.0, 4.0]]), "w")
    loss = E.reshape(E.scale(E.weighted_sum(w, np.zeros((2, 2))), 1.0), ())
    E.backward(loss)
    assert np.array_equal(w.grad, np.zeros((2, 2)))


def test_gradients_accumulate_across_backward_calls():
    w = E.Parameter(np.array([2.0, 3.0]), "w")
    for _ in range(2):
        loss = E.weighted_sum(w, np.array([1.0, 10.0]))
        E.backward(loss)
    assert np.array_equal(w.grad, np.array([2.0, 20.0]))
    w.zero_grad()
    assert np.array_equal(w.grad, np.zeros(2))


def test_same_tensor_used_twice_gets_doubled_gradient():
    w = E.Parameter(np.array([1.0, 5.0]), "w")
    loss = E.weighted_sum(E.add(w, w), np.array([1.0, 1.0]))
    E.backward(loss)
    assert np.array_equal(w.grad, np.array([2.0, 2.0]))


# ---------------------------------------------------------------------------
# elementwise / structural ops
# ---------------------------------------------------------------------------

def test_add_shape_mismatch_rejected():
    with pytest.raises(E.ShapeError):
        E.add(E.Tensor(np.ones(2)), E.Tensor(np.ones(3)))


def test_concat_single_part_is_identity():
    x = np.arange(6.0).reshape(2, 3)
    out = E.concat([E.Tensor(x)])
    assert np.array_equal(out.data, x)


def test_concat_shapes():
    a = E.Tensor(np.ones((2, 3)))
    b = E.Tensor(np.ones((2, 5)))
    assert E.concat([a, b]).data.shape == (2, 8)


def test_concat_batch_mismatch_rejected():
    with pytest.raises(E.ShapeError):
        E.concat([E.Tensor(np.ones((2, 3))), E.Tensor(np.ones((3, 3)))])


def test_concat_gradient_splits_by_offsets():
    rng = np.random.default_rng(0)
    a0 = rng.standard_normal((4, 3))
    b0 = rng.standard_normal((4, 2))
    w = projection(rng, (4, 5))
    a, b = E.Tensor(a0), E.Tensor(b0)
    E.backward(E.weighted_sum(E.concat([a, b]), w))
    # split of the full-output gradient must reassemble it exactly
    assert np.array_equal(np.concatenate([a.grad, b.grad], axis=1), w)


def test_leaky_relu_values():
    x = E.Tensor(np.array([5.0, -10.0]))
    out = E.leaky_relu(x, 0.01)
    assert np.allclose(out.data, [5.0, -0.1])


def test_leaky_relu_slope_validated():
    for bad in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            E.leaky_relu(E.Tensor(np.ones(1)), bad)


def test_leaky_relu_gradient_at_half():
    # spec-level check: analytic vs central differences at x = +/-0.5
    for x0 in (0.5, -0.5):
        x = E.Tensor(np.array([x0]))
        E.backward(E.weighted_sum(E.leaky_relu(x, 0.01), np.array([1.0])))
        f = lambda v: float(np.where(v >= 0, v, 0.01 * v)[0])
        numeric = E.numeric_gradient(f, np.array([x0]))
        assert abs(x.grad[0] - numeric[0]) < 1e-6


def test_leaky_relu_gradient_at_zero_is_one():
    x = E.Tensor(np.array([0.0]))
    E.backward(E.weighted_sum(E.leaky_relu(x, 0.3), np.array([1.0])))
    assert x.grad[0] == 1.0


def test_softmax_rows_are_distributions():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = E.softmax(E.Tensor(rng.standard_normal((5, 9)) * 10)).data
        assert np.all(p >= 0.0) and np.all(p <= 1.0)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_stable_for_huge_logits():
    p = E.softmax(E.Tensor(np.array([[1000.0, -1000.0, 0.0]]))).data
    assert np.isfinite(p).all()
    assert p[0, 0] == pytest.approx(1.0)


def test_dropout_rate_zero_is_identity():
    x = np.arange(8.0).reshape(2, 4)
    out = E.dropout(E.Tensor(x), 0.0, "train", np.random.default_rng(0))
    assert np.array_equal(out.data, x)


def test_dropout_infer_is_identity():
    x = np.arange(8.0).reshape(2, 4)
    out = E.dropout(E.Tensor(x), 0.9, "infer", None)
    assert np.array_equal(out.data, x)


def test_dropout_rate_one_rejected():
    with pytest.raises(ValueError):
        E.dropout(E.Tensor(np.ones(2)), 1.0, "train", np.random.default_rng(0))


def test_dropout_kept_fraction():
    rng = np.random.default_rng(123)
    out = E.dropout(E.Tensor(np.ones((100, 100))), 0.5, "train", rng)
    kept = np.count_nonzero(out.data) / out.data.size
    assert 0.47 <= kept <= 0.53
    # survivors are scaled by 1/(1-rate)
    assert np.all(np.isin(out.data, [0.0, 2.0]))


def test_dropout_deterministic_given_seed():
    x = np.ones((4, 4))
    a = E.dropout(E.Tensor(x), 0.4, "train", np.random.default_rng(9)).data
    b = E.dropout(E.Tensor(x), 0.4, "train", np.random.default_rng(9)).data
    assert np.array_equal(a, b)


def test_dropout_train_without_rng_rejected():
    with pytest.raises(E.EngineError):
        E.dropout(E.Tensor(np.ones(2)), 0.5, "train", None)


# ---------------------------------------------------------------------------
# finite-difference sweeps, 20 seeds per op
# ---------------------------------------------------------------------------

def test_gradients_elementwise_ops():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((3, 4))
        y = rng.standard_normal((3, 4))
        w = projection(rng, (3, 4))
        fd_check(lambda a, b: E.weighted_sum(E.add(a, b), w), [x, y])
        fd_check(lambda a: E.weighted_sum(E.scale(a, -1.7), w), [x])
        fd_check(lambda a: E.weighted_sum(E.leaky_relu(a, 0.01), w), [x])
        fd_check(lambda a: E.weighted_sum(E.softmax(a), w), [x])


def test_gradients_matmul_and_bias():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 2))
        bias = rng.standard_normal(2)
        w = projection(rng, (3, 2))
        fd_check(lambda u, v: E.weighted_sum(E.matmul(u, v), w), [a, b])
        fd_check(
            lambda u, v, c: E.weighted_sum(E.add_rowvec(E.matmul(u, v), c), w),
            [a, b, bias])


def test_gradients_structural_ops():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 3, 2, 2))
        w = projection(rng, (2, 12))
        fd_check(lambda a: E.weighted_sum(E.flatten(a), w), [x])
        fd_check(lambda a: E.weighted_sum(E.reshape(a, (6, 4)),
                                          w.reshape(6, 4)), [x])
        p1 = rng.standard_normal((4, 3))
        p2 = rng.standard_normal((4, 5))
        wc = projection(rng, (4, 8))
        fd_check(lambda a, b: E.weighted_sum(E.concat([a, b]), wc), [p1, p2])


def test_gradients_dropout_train_mode():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((5, 6))
        w = projection(rng, (5, 6))
        # fresh identical rng per evaluation keeps the mask fixed under FD
        fd_check(
            lambda a: E.weighted_sum(
                E.dropout(a, 0.3, "train", np.random.default_rng(seed + 1)), w),
            [x])
