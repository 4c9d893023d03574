"""Finite-difference gradient verification.

Central differences with step h on float64 graphs. ``loss_fn`` must rebuild
the graph from the *same* tensor objects on every call, so perturbing
``t.data`` in place changes the recomputed loss.
"""

import numpy as np


def finite_difference(loss_fn, t, index, h=1e-4):
    """Central-difference derivative of loss_fn w.r.t. t.data[index]."""
    orig = t.data[index]
    t.data[index] = orig + h
    up = float(loss_fn().data)
    t.data[index] = orig - h
    down = float(loss_fn().data)
    t.data[index] = orig
    return (up - down) / (2.0 * h)


def check_gradients(loss_fn, tensors, h=1e-4, sample=None, rng=None):
    """Compare analytic gradients of ``loss_fn`` against central differences.

    tensors: the leaves to check (must have requires_grad set).
    sample:  if given, check at most this many coordinates per tensor
             (chosen by ``rng``); otherwise check every coordinate.

    Returns the maximum relative error across all checked coordinates. The
    denominator is floored at a small fraction of the overall gradient scale
    so that coordinates with near-zero true gradient are judged against the
    finite-difference noise floor instead of against themselves.
    """
    for t in tensors:
        if t.data.dtype != np.float64:
            raise ValueError("gradient checks must run on float64 tensors")
        t.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data)
                for t in tensors]
    scale = max((float(np.max(np.abs(g))) for g in analytic), default=0.0)
    floor = max(1e-6 * scale, 1e-9)

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for t, grad in zip(tensors, analytic):
        n = t.data.size
        if sample is not None and n > sample:
            flat_ids = rng.choice(n, size=sample, replace=False)
        else:
            flat_ids = range(n)
        for fid in flat_ids:
            index = np.unravel_index(fid, t.data.shape)
            num = finite_difference(loss_fn, t, index, h)
            ana = float(grad[index])
            err = abs(ana - num) / max(abs(ana), abs(num), floor)
            worst = max(worst, err)
    return worst
