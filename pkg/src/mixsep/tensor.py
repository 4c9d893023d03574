"""Dense float tensors with reverse-mode automatic differentiation.

The engine is eager: each operation computes its value immediately and, when
gradient tracking is active, records the parent tensors plus a closure mapping
the output gradient to parent gradients. ``backward`` runs one reverse
topological sweep; gradients already stored on tensors accumulate across
calls until cleared.

float32 is the working precision. Operations preserve the dtype of their
inputs, so a graph built from float64 leaves evaluates entirely in float64 —
the finite-difference checks rely on this.
"""

import contextlib

import numpy as np

from . import kernels
from .errors import AutogradError, LengthError, ShapeError

DTYPE = np.float32

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """n-dimensional float array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp")

    # make numpy defer to our reflected operators instead of broadcasting
    # Tensor objects elementwise
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False):
        self.data = data
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # arithmetic sugar; scalars are promoted to matching-dtype constants
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def tensor(data, requires_grad=False, dtype=None):
    """Wrap ``data`` as a Tensor; defaults to float32 for non-float inputs."""
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(DTYPE)
    return Tensor(arr, requires_grad=requires_grad)


def parameter(data, dtype=None):
    return tensor(data, requires_grad=True, dtype=dtype)


def _as_tensor(x, like=None):
    if isinstance(x, Tensor):
        return x
    dt = like.data.dtype if like is not None else DTYPE
    return Tensor(np.asarray(x, dtype=dt))


def _check_dtypes(a, b, opname):
    if a.data.dtype != b.data.dtype:
        raise AutogradError(
            f"{opname}: mixed dtypes {a.data.dtype.name} and {b.data.dtype.name}")


def _node(data, parents, vjp):
    """Create a graph node when tracking is on, a bare tensor otherwise."""
    if _grad_enabled and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = parents
        out._vjp = vjp
        return out
    return Tensor(data)


def _unbroadcast(g, shape):
    """Reduce gradient ``g`` back to ``shape`` after numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------

def add(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    _check_dtypes(a, b, "add")
    out = a.data + b.data

    def vjp(g):
        return (_unbroadcast(g, a.shape) if a.requires_grad else None,
                _unbroadcast(g, b.shape) if b.requires_grad else None)

    return _node(out, (a, b), vjp)


def sub(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    _check_dtypes(a, b, "sub")
    out = a.data - b.data

    def vjp(g):
        return (_unbroadcast(g, a.shape) if a.requires_grad else None,
                _unbroadcast(-g, b.shape) if b.requires_grad else None)

    return _node(out, (a, b), vjp)


def mul(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    _check_dtypes(a, b, "mul")
    out = a.data * b.data

    def vjp(g):
        return (_unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
                _unbroadcast(g * a.data, b.shape) if b.requires_grad else None)

    return _node(out, (a, b), vjp)


def div(a, b):
    a = _as_tensor(a, b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, a)
    _check_dtypes(a, b, "div")
    out = a.data / b.data

    def vjp(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = (_unbroadcast(-g * a.data / (b.data * b.data), b.shape)
              if b.requires_grad else None)
        return (ga, gb)

    return _node(out, (a, b), vjp)


def neg(a):
    def vjp(g):
        return (-g,)
    return _node(-a.data, (a,), vjp)


def matmul(a, b):
    a = _as_tensor(a)
    b = _as_tensor(b)
    _check_dtypes(a, b, "matmul")
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs 2-D or batched operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    if a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul batch dimensions disagree: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2) if a.requires_grad else None
        gb = np.swapaxes(a.data, -1, -2) @ g if b.requires_grad else None
        return (ga, gb)

    return _node(out, (a, b), vjp)


def transpose(a, axes=None):
    out = np.transpose(a.data, axes)
    inv = None if axes is None else tuple(np.argsort(axes))

    def vjp(g):
        return (np.transpose(g, inv),)

    return _node(out, (a,), vjp)


def reshape(a, shape):
    out = a.data.reshape(shape)
    orig = a.shape

    def vjp(g):
        return (g.reshape(orig),)

    return _node(out, (a,), vjp)


def concat(parts, axis=0):
    parts = tuple(_as_tensor(p) for p in parts)
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        pieces = np.split(g, splits, axis=axis)
        return tuple(piece if p.requires_grad else None
                     for p, piece in zip(parts, pieces))

    return _node(out, parts, vjp)


def narrow(a, axis, start, length):
    """Slice ``length`` entries starting at ``start`` along ``axis``."""
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = a.data[idx]
    shape = a.shape

    def vjp(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[idx] = g
        return (gx,)

    return _node(out, (a,), vjp)


def pad(a, widths):
    """Zero padding; ``widths`` is a (before, after) pair per axis."""
    out = np.pad(a.data, widths)
    idx = tuple(slice(b, b + n) for (b, _), n in zip(widths, a.shape))

    def vjp(g):
        return (g[idx],)

    return _node(out, (a,), vjp)


def _restore_reduced(g, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    if not keepdims:
        for ax in sorted(ax % len(shape) for ax in axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def sum_(a, axis=None, keepdims=False):
    out = a.data.sum(axis=axis, keepdims=keepdims)
    shape = a.shape

    def vjp(g):
        return (_restore_reduced(g, shape, axis, keepdims).copy(),)

    return _node(np.asarray(out, dtype=a.data.dtype), (a,), vjp)


def mean(a, axis=None, keepdims=False):
    out = a.data.mean(axis=axis, keepdims=keepdims)
    shape = a.shape
    n = a.size if axis is None else np.prod(
        [shape[ax] for ax in ((axis,) if isinstance(axis, int) else axis)])
    inv_n = 1.0 / float(n)

    def vjp(g):
        return ((_restore_reduced(g, shape, axis, keepdims) * inv_n).astype(g.dtype),)

    return _node(np.asarray(out, dtype=a.data.dtype), (a,), vjp)


def exp(a):
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _node(out, (a,), vjp)


def log(a):
    out = np.log(a.data)

    def vjp(g):
        return (g / a.data,)

    return _node(out, (a,), vjp)


def sqrt(a):
    out = np.sqrt(a.data)

    def vjp(g):
        return (g * (0.5 / out),)

    return _node(out, (a,), vjp)


def relu(a):
    out = np.maximum(a.data, 0)

    def vjp(g):
        return (g * (a.data > 0),)

    return _node(out, (a,), vjp)


def sigmoid(a):
    out = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _node(out, (a,), vjp)


def softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((g - dot) * out,)

    return _node(out, (a,), vjp)


# ---------------------------------------------------------------------------
# convolution primitives (dispatch into the kernel backend)
# ---------------------------------------------------------------------------

def conv1d(x, w, stride=1, padding=0):
    """x (Cin, T), w (Cout, Cin, Kw) -> (Cout, Tout); cross-correlation."""
    x = _as_tensor(x)
    w = _as_tensor(w)
    _check_dtypes(x, w, "conv1d")
    if x.ndim != 2 or w.ndim != 3:
        raise ShapeError(f"conv1d expects x (Cin,T) and w (Cout,Cin,Kw), got {x.shape}, {w.shape}")
    cin, t_in = x.shape
    cout, w_cin, kw = w.shape
    if w_cin != cin:
        raise ShapeError(f"conv1d channel mismatch: x {x.shape} vs w {w.shape}")
    if stride < 1:
        raise ShapeError(f"conv1d stride must be >= 1, got {stride}")
    t_out = (t_in + 2 * padding - kw) // stride + 1
    if t_out < 1:
        raise LengthError(
            f"conv1d input too short: T={t_in} with pad={padding} cannot fit kernel {kw}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out = kernels.conv1d_fwd(xd, wd, stride, padding)

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = kernels.conv1d_bwd_x(g, wd, stride, padding, t_in) if x.requires_grad else None
        gw = kernels.conv1d_bwd_w(g, xd, stride, padding, kw) if w.requires_grad else None
        return (gx, gw)

    return _node(out, (x, w), vjp)


def conv_transpose1d(x, w, stride=1):
    """x (Cin, S), w (Cin, Cout, Kw) -> (Cout, (S-1)*stride + Kw)."""
    x = _as_tensor(x)
    w = _as_tensor(w)
    _check_dtypes(x, w, "conv_transpose1d")
    if x.ndim != 2 or w.ndim != 3:
        raise ShapeError(
            f"conv_transpose1d expects x (Cin,S) and w (Cin,Cout,Kw), got {x.shape}, {w.shape}")
    cin, s = x.shape
    if w.shape[0] != cin:
        raise ShapeError(f"conv_transpose1d channel mismatch: x {x.shape} vs w {w.shape}")
    kw = w.shape[2]
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out = kernels.convt1d_fwd(xd, wd, stride)

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = kernels.convt1d_bwd_x(g, wd, stride, s) if x.requires_grad else None
        gw = kernels.convt1d_bwd_w(g, xd, stride, kw) if w.requires_grad else None
        return (gx, gw)

    return _node(out, (x, w), vjp)


def grouped_conv2d(x, w, groups=1, dilation=(1, 1), padding=None):
    """x (Cin, H, W), w (Cout, Cin/groups, Kh, Kw) -> (Cout, Hout, Wout).

    Stride 1. ``padding=None`` picks the symmetric zero padding that preserves
    H and W (requires odd effective kernel extents).
    """
    x = _as_tensor(x)
    w = _as_tensor(w)
    _check_dtypes(x, w, "grouped_conv2d")
    if x.ndim != 3 or w.ndim != 4:
        raise ShapeError(
            f"grouped_conv2d expects x (C,H,W) and w (Cout,Cin/g,Kh,Kw), got {x.shape}, {w.shape}")
    cin = x.shape[0]
    cout, cpg, kh, kw = w.shape
    if cin % groups or cout % groups:
        raise ShapeError(
            f"grouped_conv2d: channels ({cin} in, {cout} out) not divisible by groups={groups}")
    if cpg != cin // groups:
        raise ShapeError(
            f"grouped_conv2d: weight expects {cpg} channels/group, input provides {cin // groups}")
    dil_h, dil_w = dilation
    if padding is None:
        eh, ew = dil_h * (kh - 1), dil_w * (kw - 1)
        if eh % 2 or ew % 2:
            raise ShapeError(
                f"grouped_conv2d: kernel extent ({eh + 1},{ew + 1}) cannot preserve H,W symmetrically")
        padding = (eh // 2, ew // 2)
    pad_h, pad_w = padding
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out = kernels.gconv2d_fwd(xd, wd, groups, dil_h, dil_w, pad_h, pad_w)
    h_in, w_in = x.shape[1], x.shape[2]

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = (kernels.gconv2d_bwd_x(g, wd, groups, dil_h, dil_w, pad_h, pad_w, h_in, w_in)
              if x.requires_grad else None)
        gw = (kernels.gconv2d_bwd_w(g, xd, groups, dil_h, dil_w, pad_h, pad_w, kh, kw)
              if w.requires_grad else None)
        return (gx, gw)

    return _node(out, (x, w), vjp)


# ---------------------------------------------------------------------------
# reverse sweep
# ---------------------------------------------------------------------------

def _toposort(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    Gradients accumulate into existing ``grad`` buffers; repeated calls add up
    until the buffers are cleared.
    """
    if not isinstance(loss, Tensor):
        raise AutogradError("backward expects a Tensor")
    if loss.data.size != 1:
        raise AutogradError(f"backward requires a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _toposort(loss)
    flows = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = flows.pop(id(node), None)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g
        if node._vjp is None:
            continue
        for p, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not p.requires_grad:
                continue
            key = id(p)
            have = flows.get(key)
            flows[key] = pg if have is None else have + pg
