"""Module container and the layer zoo.

Parameters register automatically on attribute assignment and get hierarchical
dotted names (``blocks.3.attention.q_proj.weight``) used for checkpointing.
Initialization follows uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights,
zeros for biases, ones/zeros for norm gains/offsets, all drawn from the rng
handed to the constructor.
"""

import numpy as np

from . import functional as F
from . import tensor as T
from .errors import ShapeError
from .tensor import Tensor


def _uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Base class: tracks parameters and child modules by attribute name."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        params = self.__dict__.get("_params")
        if params is not None:
            params.pop(name, None)
            self._children.pop(name, None)
            if isinstance(value, Tensor):
                params[name] = value
            elif isinstance(value, Module):
                self._children[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield (prefix + name, p)
        for name, child in self._children.items():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def num_parameters(self):
        return sum(p.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def to_dtype(self, dtype):
        """In-place dtype cast of every parameter (grads are dropped)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class ModuleList(Module):
    def __init__(self, modules=()):
        super().__init__()
        self._items = []
        for m in modules:
            self.append(m)

    def append(self, module):
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Linear(Module):
    """y = x @ weight + bias, applied to the last axis."""

    def __init__(self, in_dim, out_dim, rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = T.parameter(_uniform(rng, (in_dim, out_dim), in_dim, dtype))
        self.bias = T.parameter(np.zeros(out_dim, dtype=dtype))

    def forward(self, x):
        lead = x.shape[:-1]
        flat = T.reshape(x, (-1, self.in_dim)) if x.ndim != 2 else x
        y = T.matmul(flat, self.weight) + self.bias
        return T.reshape(y, lead + (self.out_dim,)) if x.ndim != 2 else y


class Conv1d(Module):
    """Strided 1-D convolution over (Cin, T) inputs."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1,
                 padding=0, rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel_size
        self.weight = T.parameter(
            _uniform(rng, (out_channels, in_channels, kernel_size), fan_in, dtype))
        self.bias = T.parameter(np.zeros(out_channels, dtype=dtype))

    def forward(self, x):
        y = T.conv1d(x, self.weight, self.stride, self.padding)
        return y + T.reshape(self.bias, (-1, 1))


class ConvTranspose1d(Module):
    """Adjoint of Conv1d; maps (Cin, S) to (Cout, (S-1)*stride + K)."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1,
                 rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.stride = stride
        fan_in = in_channels * kernel_size
        self.weight = T.parameter(
            _uniform(rng, (in_channels, out_channels, kernel_size), fan_in, dtype))
        self.bias = T.parameter(np.zeros(out_channels, dtype=dtype))

    def forward(self, x):
        y = T.conv_transpose1d(x, self.weight, self.stride)
        return y + T.reshape(self.bias, (-1, 1))


class GroupedConv2d(Module):
    """Grouped dilated 2-D convolution preserving spatial extent (stride 1)."""

    def __init__(self, in_channels, out_channels, kernel_size, groups=1,
                 dilation=(1, 1), rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        if in_channels % groups or out_channels % groups:
            raise ShapeError(
                f"channels ({in_channels} in, {out_channels} out) not divisible by groups={groups}")
        self.groups = groups
        self.dilation = dilation
        kh, kw = kernel_size
        cpg = in_channels // groups
        fan_in = cpg * kh * kw
        self.weight = T.parameter(
            _uniform(rng, (out_channels, cpg, kh, kw), fan_in, dtype))
        self.bias = T.parameter(np.zeros(out_channels, dtype=dtype))

    def forward(self, x):
        y = T.grouped_conv2d(x, self.weight, self.groups, self.dilation)
        return y + T.reshape(self.bias, (-1, 1, 1))


class DepthwiseConv1d(Module):
    """Per-channel 1-D convolution on (S, C) sequences, length-preserving."""

    def __init__(self, channels, kernel_size=3, rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.channels = channels
        self.weight = T.parameter(
            _uniform(rng, (channels, 1, 1, kernel_size), kernel_size, dtype))
        self.bias = T.parameter(np.zeros(channels, dtype=dtype))

    def forward(self, x):
        s = x.shape[0]
        xc = T.reshape(T.transpose(x), (self.channels, 1, s))
        y = T.grouped_conv2d(xc, self.weight, self.channels, (1, 1))
        y = y + T.reshape(self.bias, (-1, 1, 1))
        return T.transpose(T.reshape(y, (self.channels, s)))


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5, dtype=T.DTYPE):
        super().__init__()
        self.eps = eps
        self.gamma = T.parameter(np.ones(dim, dtype=dtype))
        self.beta = T.parameter(np.zeros(dim, dtype=dtype))

    def forward(self, x):
        return F.layer_norm(x, self.gamma, self.beta, self.eps)


class InstanceNorm(Module):
    """Per-channel normalization over the spatial axes of (C, H, W)."""

    def __init__(self, channels, eps=1e-5, dtype=T.DTYPE):
        super().__init__()
        self.eps = eps
        self.gamma = T.parameter(np.ones(channels, dtype=dtype))
        self.beta = T.parameter(np.zeros(channels, dtype=dtype))

    def forward(self, x):
        return F.instance_norm(x, self.gamma, self.beta, self.eps)


class ChannelAffine(Module):
    """Learnable per-channel gain and offset for (C, H, W) feature maps.

    Used inside the memory blocks in place of a statistics-based norm: any
    normalization over time would couple every position (breaking the exact
    finite receptive field) and one over channels would mix groups.
    """

    def __init__(self, channels, dtype=T.DTYPE):
        super().__init__()
        self.gain = T.parameter(np.ones(channels, dtype=dtype))
        self.offset = T.parameter(np.zeros(channels, dtype=dtype))

    def forward(self, x):
        c = x.shape[0]
        return x * T.reshape(self.gain, (c, 1, 1)) + T.reshape(self.offset, (c, 1, 1))


class PReLU(Module):
    """Learnable per-channel negative slope, initialized at 0.25."""

    def __init__(self, channels, channel_axis=-1, init=0.25, dtype=T.DTYPE):
        super().__init__()
        self.channel_axis = channel_axis
        self.alpha = T.parameter(np.full(channels, init, dtype=dtype))

    def forward(self, x):
        axis = self.channel_axis % x.ndim
        shape = tuple(x.shape[axis] if i == axis else 1 for i in range(x.ndim))
        return F.prelu(x, T.reshape(self.alpha, shape))


class ConvUnit(Module):
    """Position-local convolution block on (S, D) sequences.

    LayerNorm -> linear -> SiLU -> depthwise conv (kernel 3), plus an input
    skip, so zeroed weights leave the input untouched. Output at step t sees
    inputs only within |t - s| <= 1 beyond the skip path.
    """

    def __init__(self, dim, kernel_size=3, rng=None, dtype=T.DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng()
        self.norm = LayerNorm(dim, dtype=dtype)
        self.lin = Linear(dim, dim, rng=rng, dtype=dtype)
        self.dconv = DepthwiseConv1d(dim, kernel_size, rng=rng, dtype=dtype)

    def forward(self, x):
        h = F.silu(self.lin(self.norm(x)))
        return x + self.dconv(h)
