"""Shared helpers for gradient checks against finite differences."""

import numpy as np

from toonface import engine as E


def fd_check(build_loss, arrays, atol=1e-7, rtol=1e-4, h=1e-5):
    """Compare analytic gradients of every input against central differences.

    build_loss maps one Tensor per entry of ``arrays`` to a scalar loss
    Tensor. Any internal randomness must be reseeded inside build_loss so
    repeated evaluations are bit-identical.
    """
    tensors = [E.Tensor(np.array(a, dtype=np.float64)) for a in arrays]
    loss = build_loss(*tensors)
    E.backward(loss)
    for i, a in enumerate(arrays):
        def f(x, i=i):
            args = [np.array(arr, dtype=np.float64) for arr in arrays]
            args[i] = x
            return float(build_loss(*[E.Tensor(arr) for arr in args]).data)
        numeric = E.numeric_gradient(f, np.array(a, dtype=np.float64), h=h)
        assert tensors[i].grad is not None, f"input {i} received no gradient"
        assert E.gradients_close(tensors[i].grad, numeric, atol, rtol), (
            f"input {i}: analytic {tensors[i].grad!r} vs numeric {numeric!r}")


def projection(rng, shape):
    """Fixed random weights for reducing an op output to a scalar."""
    return rng.standard_normal(shape)


def param_fd_check(build_loss, params, rng, coords_per_param=3,
                   atol=1e-6, rtol=1e-3, h=1e-6):
    """Spot-check model parameter gradients against central differences.

    build_loss takes no arguments and must rebuild the scalar loss from
    the parameters' current .data (reseeding any dropout internally).
    Only a random subset of coordinates per parameter is probed; a full
    sweep over every weight of even a small network is needlessly slow.
    h stays at 1e-6: wider steps straddle pool-argmax ties and leaky
    kinks often enough to corrupt the difference quotient.
    """
    loss = build_loss()
    E.zero_gradients(params)
    E.backward(loss)
    grads = [p.grad.copy() for p in params]
    for p, grad in zip(params, grads):
        flat = p.data.reshape(-1)
        k = min(coords_per_param, flat.size)
        for c in rng.choice(flat.size, size=k, replace=False):
            keep = flat[c]
            flat[c] = keep + h
            up = float(build_loss().data)
            flat[c] = keep - h
            down = float(build_loss().data)
            flat[c] = keep
            numeric = (up - down) / (2 * h)
            analytic = grad.reshape(-1)[c]
            assert abs(analytic - numeric) <= \
                atol + rtol * max(abs(analytic), abs(numeric)), (
                    f"{p.name}[{c}]: analytic {analytic!r} "
                    f"vs numeric {numeric!r}")
