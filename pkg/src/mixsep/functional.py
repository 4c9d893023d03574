"""Composite differentiable functions built from tensor primitives."""

from . import tensor as T
from .tensor import Tensor, mean, mul, relu, sigmoid, sqrt


def silu(x):
    return mul(x, sigmoid(x))


def prelu(x, alpha):
    """Parametric ReLU; ``alpha`` broadcasts against ``x`` (per-channel slope)."""
    return relu(x) - mul(alpha, relu(-x))


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine.

    One statistic per leading index, so time steps never mix.
    """
    mu = mean(x, axis=-1, keepdims=True)
    xc = x - mu
    var = mean(mul(xc, xc), axis=-1, keepdims=True)
    xn = xc / sqrt(var + eps)
    return mul(xn, gamma) + beta


def instance_norm(x, gamma, beta, eps=1e-5):
    """Normalize each channel of a (C, H, W) tensor over its spatial extent.

    ``gamma``/``beta`` are (C,) and broadcast over H, W.
    """
    c = x.shape[0]
    mu = mean(x, axis=(1, 2), keepdims=True)
    xc = x - mu
    var = mean(mul(xc, xc), axis=(1, 2), keepdims=True)
    xn = xc / sqrt(var + eps)
    return mul(xn, T.reshape(gamma, (c, 1, 1))) + T.reshape(beta, (c, 1, 1))


def dot(a, b):
    """Sum of the elementwise product (inner product for flat tensors)."""
    return mul(a, b).sum()


def squared_norm(a):
    return dot(a, a)


LOG10E_TIMES_10 = 10.0 / 2.302585092994046  # 10 / ln(10)


def log10_db(ratio):
    """10 * log10(ratio): power ratio to decibels."""
    return LOG10E_TIMES_10 * T.log(ratio)


def as_constant(x, dtype=None, like=None):
    """Wrap array-likes as non-tracked tensors, matching ``like``'s dtype."""
    if isinstance(x, Tensor):
        return x
    if dtype is None and like is not None:
        dtype = like.dtype
    return T.tensor(x, dtype=dtype)
