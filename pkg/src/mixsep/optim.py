"""Adam optimizer and global gradient-norm clipping."""

import numpy as np

from .errors import ShapeError


class AdamState:
    """Per-parameter first/second moment buffers plus the shared step count."""

    def __init__(self, params, lr, beta1, beta2, eps):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


class Adam:
    def __init__(self, params, lr=15e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.state = AdamState(self.params, lr, beta1, beta2, eps)

    @property
    def lr(self):
        return self.state.lr

    @lr.setter
    def lr(self, value):
        self.state.lr = value

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        """Bias-corrected Adam update; parameters with no grad are skipped."""
        st = self.state
        st.step_count += 1
        bc1 = 1.0 - st.beta1 ** st.step_count
        bc2 = 1.0 - st.beta2 ** st.step_count
        for p, m, v in zip(self.params, st.m, st.v):
            if p.grad is None:
                continue
            g = p.grad
            if g.shape != p.data.shape:
                raise ShapeError(f"grad shape {g.shape} != param shape {p.data.shape}")
            m *= st.beta1
            m += (1.0 - st.beta1) * g
            v *= st.beta2
            v += (1.0 - st.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= (st.lr * m_hat / (np.sqrt(v_hat) + st.eps)).astype(p.data.dtype)


def clip_global_norm(grads, max_norm):
    """Scale all grads in place so the global l2 norm is at most ``max_norm``.

    Returns the norm before clipping.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    total = 0.0
    for g in grads:
        if g is not None:
            total += float(np.sum(g.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            if g is not None:
                g *= scale
    return norm
