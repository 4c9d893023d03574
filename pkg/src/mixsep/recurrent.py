"""Convolutional memory module: recurrent-pattern modeling without recurrence.

Structure on (S, N) sequences: a bottleneck (pointwise conv + PReLU +
LayerNorm) down to N', a gated unit where two convolutional branches produce
a gate U and a value V, a dilated feedforward memory network transforms V
into Y, and the output is x + U * Y; then LayerNorm + pointwise conv back to
N with an outer residual. Every structural piece can be toggled off, which
also changes the parameter count in a closed-form way.
"""

from dataclasses import dataclass

import numpy as np

from . import functional as F
from . import nn
from . import tensor as T
from .errors import ConfigError
from .profiling import profiler


@dataclass
class RecurrentConfig:
    embed_dim: int
    bottleneck_dim: int
    memory_blocks: int = 2
    memory_kernel: int = 5
    memory_groups: int = 0        # 0 = depthwise (one group per channel)
    dilation_on: bool = True
    dense_on: bool = True
    gate_on: bool = True
    conv_u_on: bool = True
    bottleneck_on: bool = True

    def validate(self):
        if self.bottleneck_dim > self.embed_dim:
            raise ConfigError(
                f"bottleneck_dim {self.bottleneck_dim} exceeds embed_dim {self.embed_dim}")
        if self.memory_blocks < 1:
            raise ConfigError(f"memory_blocks must be >= 1, got {self.memory_blocks}")
        if self.memory_kernel % 2 == 0:
            raise ConfigError(f"memory_kernel must be odd, got {self.memory_kernel}")
        groups = self.groups
        if self.working_dim % groups:
            raise ConfigError(
                f"memory width {self.working_dim} not divisible by memory_groups {groups}")
        return self

    @property
    def working_dim(self):
        """Channel width the gated unit and memory run at."""
        return self.bottleneck_dim if self.bottleneck_on else self.embed_dim

    @property
    def groups(self):
        return self.memory_groups if self.memory_groups else self.working_dim

    def dilation(self, block_index):
        """Dilation of memory block l (1-based): doubles per block when on."""
        return 2 ** (block_index - 1) if self.dilation_on else 1


def interleave_channels(stack):
    """Concatenate (D, 1, S) feature maps so channel groups stay per-dimension.

    Output layout is [x0[0], x1[0], ..., x0[1], x1[1], ...]: the history of
    embedding dimension d occupies a contiguous channel run, so a grouped
    convolution with D groups sees exactly one dimension's history per group.
    """
    if len(stack) == 1:
        return stack[0]
    d, _, s = stack[0].shape
    parts = [T.reshape(x, (d, 1, 1, s)) for x in stack]
    return T.reshape(T.concat(parts, axis=1), (d * len(stack), 1, s))


class MemoryBlock(nn.Module):
    """One dilated grouped convolution block of the memory layer.

    Zero padding -> grouped 2-D convolution with kernel (1, k) dilated along
    time -> per-channel affine -> PReLU, on (C, 1, S) maps. The affine stands
    in for a statistics-based norm: time statistics would give every position
    a gradient path to every other, destroying the exact receptive field, and
    channel statistics would leak across groups.
    """

    def __init__(self, in_channels, out_channels, kernel, dilation, groups,
                 rng=None, dtype=T.DTYPE):
        super().__init__()
        self.conv = nn.GroupedConv2d(in_channels, out_channels, (1, kernel),
                                     groups=groups, dilation=(1, dilation),
                                     rng=rng, dtype=dtype)
        self.affine = nn.ChannelAffine(out_channels, dtype=dtype)
        self.act = nn.PReLU(out_channels, channel_axis=0, dtype=dtype)

    def forward(self, x):
        return self.act(self.affine(self.conv(x)))


class DilatedMemory(nn.Module):
    """Feedforward sequential memory over (S, D) sequences.

    A pointwise FFN (linear + PReLU) produces the base state X0; L grouped
    convolution blocks with doubling time dilation refine it, each fed the
    concatenation of all previous states when dense connections are on (just
    the previous state otherwise); a final pointwise projection folds the
    collected states back to D channels and adds them onto X0.
    """

    def __init__(self, cfg: RecurrentConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.cfg = cfg
        d = cfg.working_dim
        rng = rng or np.random.default_rng()
        self.ffn = nn.Linear(d, d, rng=rng, dtype=dtype)
        self.ffn_act = nn.PReLU(d, dtype=dtype)
        blocks = []
        for level in range(1, cfg.memory_blocks + 1):
            in_ch = level * d if cfg.dense_on else d
            blocks.append(MemoryBlock(in_ch, d, cfg.memory_kernel,
                                      cfg.dilation(level), cfg.groups,
                                      rng=rng, dtype=dtype))
        self.blocks = nn.ModuleList(blocks)
        proj_in = (cfg.memory_blocks + 1) * d if cfg.dense_on else d
        self.proj = nn.Linear(proj_in, d, rng=rng, dtype=dtype)

    def forward(self, x):
        s, d = x.shape
        x0 = self.ffn_act(self.ffn(x))
        states = [T.reshape(T.transpose(x0), (d, 1, s))]
        for block in self.blocks:
            feed = interleave_channels(states) if self.cfg.dense_on else states[-1]
            states.append(block(feed))
        if self.cfg.dense_on:
            collected = interleave_channels(states)
        else:
            collected = states[-1]
        flat = T.transpose(T.reshape(collected, (collected.shape[0], s)))
        return x0 + self.proj(flat)


class GatedConvUnit(nn.Module):
    """Gated transform O = x + U * memory(V) with convolutional branches.

    ``gate_unit`` and ``value_unit`` are independently parameterized ConvUnits
    (or plain linear layers when conv_u is toggled off); with the gate toggled
    off the memory output is added directly: O = x + memory(x).
    """

    def __init__(self, cfg: RecurrentConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.cfg = cfg
        d = cfg.working_dim
        rng = rng or np.random.default_rng()
        if cfg.gate_on:
            if cfg.conv_u_on:
                self.gate_unit = nn.ConvUnit(d, rng=rng, dtype=dtype)
                self.value_unit = nn.ConvUnit(d, rng=rng, dtype=dtype)
            else:
                self.gate_unit = nn.Linear(d, d, rng=rng, dtype=dtype)
                self.value_unit = nn.Linear(d, d, rng=rng, dtype=dtype)
        self.memory = DilatedMemory(cfg, rng=rng, dtype=dtype)

    def forward(self, x):
        if not self.cfg.gate_on:
            return x + self.memory(x)
        gate = self.gate_unit(x)
        value = self.value_unit(x)
        return x + gate * self.memory(value)


class RecurrentModule(nn.Module):
    """Full memory module on (S, N) sequences, shape preserving.

    bottleneck (pointwise N->N' + PReLU + LayerNorm) -> gated unit -> output
    layer (LayerNorm + pointwise N'->N), wrapped in an outer residual. With
    the bottleneck toggled off the gated unit runs directly at width N and
    its internal skip is the only residual path.
    """

    def __init__(self, cfg: RecurrentConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        rng = rng or np.random.default_rng()
        if cfg.bottleneck_on:
            n, b = cfg.embed_dim, cfg.bottleneck_dim
            self.down_proj = nn.Linear(n, b, rng=rng, dtype=dtype)
            self.down_act = nn.PReLU(b, dtype=dtype)
            self.down_norm = nn.LayerNorm(b, dtype=dtype)
            self.out_norm = nn.LayerNorm(b, dtype=dtype)
            self.up_proj = nn.Linear(b, n, rng=rng, dtype=dtype)
        self.gcu = GatedConvUnit(cfg, rng=rng, dtype=dtype)

    def bottleneck(self, x):
        return self.down_norm(self.down_act(self.down_proj(x)))

    def forward(self, x):
        with profiler.section("recurrent.module"):
            if not self.cfg.bottleneck_on:
                return self.gcu(x)
            h = self.bottleneck(x)
            h = self.gcu(h)
            return x + self.up_proj(self.out_norm(h))
