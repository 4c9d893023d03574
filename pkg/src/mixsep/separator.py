"""Encoder / masking network / decoder assembly.

A learned strided filterbank encodes the mixture waveform into a non-negative
embedding, a stack of hybrid blocks (attention + memory module) estimates one
non-negative mask per source, and the transposed filterbank reconstructs each
masked embedding back to a waveform of exactly the input length.
"""

from dataclasses import dataclass, field

import numpy as np

from . import nn
from . import tensor as T
from .attention import AttentionConfig, JointAttentionBlock
from .errors import ConfigError, LengthError
from .profiling import profiler
from .recurrent import RecurrentConfig, RecurrentModule


@dataclass
class ModelConfig:
    num_sources: int = 2
    encoder_kernel: int = 8       # stride is half the kernel
    embed_dim: int = 64
    num_blocks: int = 2
    hybrid_on: bool = True        # False drops every memory module
    attention: AttentionConfig = field(default_factory=lambda: AttentionConfig(64, 8))
    recurrent: RecurrentConfig = field(default_factory=lambda: RecurrentConfig(64, 32))

    def validate(self):
        if self.num_sources < 2:
            raise ConfigError(f"num_sources must be >= 2, got {self.num_sources}")
        if self.encoder_kernel < 2 or self.encoder_kernel % 2:
            raise ConfigError(f"encoder_kernel must be even and >= 2, got {self.encoder_kernel}")
        if self.num_blocks < 1:
            raise ConfigError(f"num_blocks must be >= 1, got {self.num_blocks}")
        if self.attention.embed_dim != self.embed_dim:
            raise ConfigError("attention embed_dim differs from model embed_dim")
        if self.recurrent.embed_dim != self.embed_dim:
            raise ConfigError("recurrent embed_dim differs from model embed_dim")
        self.attention.validate()
        self.recurrent.validate()
        return self

    @property
    def stride(self):
        return self.encoder_kernel // 2

    def encoded_length(self, num_samples):
        """S = 2T/K - 1 for kernel K, stride K/2; validates the alignment."""
        if num_samples < self.encoder_kernel:
            raise LengthError(
                f"input length {num_samples} shorter than encoder kernel {self.encoder_kernel}")
        if num_samples % self.stride:
            raise LengthError(
                f"input length {num_samples} must be a multiple of {self.stride} "
                f"(encoder stride)")
        return 2 * num_samples // self.encoder_kernel - 1

    def aligned_length(self, num_samples):
        """Smallest valid input length >= num_samples."""
        base = max(num_samples, self.encoder_kernel)
        return -(-base // self.stride) * self.stride


def build_config(num_sources=2, encoder_kernel=8, embed_dim=64, num_blocks=2,
                 chunk_size=8, qk_dim=32, expansion=2, rotary_on=True,
                 hybrid_on=True, bottleneck_dim=32, memory_blocks=2,
                 memory_kernel=5, memory_groups=0, dilation_on=True,
                 dense_on=True, gate_on=True, conv_u_on=True,
                 bottleneck_on=True):
    """Flat-keyword constructor for ModelConfig."""
    cfg = ModelConfig(
        num_sources=num_sources,
        encoder_kernel=encoder_kernel,
        embed_dim=embed_dim,
        num_blocks=num_blocks,
        hybrid_on=hybrid_on,
        attention=AttentionConfig(embed_dim, chunk_size, qk_dim, expansion, rotary_on),
        recurrent=RecurrentConfig(embed_dim, bottleneck_dim, memory_blocks,
                                  memory_kernel, memory_groups, dilation_on,
                                  dense_on, gate_on, conv_u_on, bottleneck_on),
    )
    return cfg.validate()


class Encoder(nn.Module):
    """Waveform (T,) -> non-negative embedding (N, S)."""

    def __init__(self, cfg: ModelConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.cfg = cfg
        self.conv = nn.Conv1d(1, cfg.embed_dim, cfg.encoder_kernel,
                              stride=cfg.stride, rng=rng, dtype=dtype)

    def forward(self, wave):
        self.cfg.encoded_length(wave.shape[0])
        x = T.reshape(wave, (1, wave.shape[0]))
        return T.relu(self.conv(x))


class HybridBlock(nn.Module):
    """Attention block followed (optionally) by a memory module."""

    def __init__(self, cfg: ModelConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.attention = JointAttentionBlock(cfg.attention, rng=rng, dtype=dtype)
        if cfg.hybrid_on:
            self.recurrent = RecurrentModule(cfg.recurrent, rng=rng, dtype=dtype)
        else:
            self.recurrent = None

    def forward(self, x):
        x = self.attention(x)
        if self.recurrent is not None:
            x = self.recurrent(x)
        return x


class MaskNet(nn.Module):
    """Embedding (N, S) -> per-source non-negative masks (C, N, S)."""

    def __init__(self, cfg: ModelConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.cfg = cfg
        n = cfg.embed_dim
        rng = rng or np.random.default_rng()
        self.in_proj = nn.Linear(n, n, rng=rng, dtype=dtype)
        self.in_norm = nn.LayerNorm(n, dtype=dtype)
        self.blocks = nn.ModuleList(
            HybridBlock(cfg, rng=rng, dtype=dtype) for _ in range(cfg.num_blocks))
        self.head = nn.Linear(n, cfg.num_sources * n, rng=rng, dtype=dtype)

    def forward(self, emb):
        n, s = emb.shape
        x = self.in_norm(self.in_proj(T.transpose(emb)))
        for block in self.blocks:
            x = block(x)
        masks = T.relu(self.head(x))                      # (S, C*N)
        masks = T.reshape(masks, (s, self.cfg.num_sources, n))
        return T.transpose(masks, (1, 2, 0))              # (C, N, S)


class Decoder(nn.Module):
    """Masked embeddings back to C waveforms of the original length."""

    def __init__(self, cfg: ModelConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        self.cfg = cfg
        self.deconv = nn.ConvTranspose1d(cfg.embed_dim, 1, cfg.encoder_kernel,
                                         stride=cfg.stride, rng=rng, dtype=dtype)

    def forward(self, emb, masks):
        n, s = emb.shape
        waves = []
        for i in range(self.cfg.num_sources):
            masked = T.reshape(T.narrow(masks, 0, i, 1), (n, s)) * emb
            waves.append(self.deconv(masked))
        return T.concat(waves, axis=0)


class Separator(nn.Module):
    """Full model: waveform (T,) -> stacked source estimates (C, T)."""

    def __init__(self, cfg: ModelConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        rng = rng or np.random.default_rng()
        self.encoder = Encoder(cfg, rng=rng, dtype=dtype)
        self.masknet = MaskNet(cfg, rng=rng, dtype=dtype)
        self.decoder = Decoder(cfg, rng=rng, dtype=dtype)

    def forward(self, wave):
        with profiler.section("encode"):
            emb = self.encoder(wave)
        with profiler.section("masknet"):
            masks = self.masknet(emb)
        with profiler.section("decode"):
            out = self.decoder(emb, masks)
        return out

    def separate(self, wave):
        """Inference on a numpy waveform; returns a (C, T) numpy array."""
        wave = np.ascontiguousarray(wave, dtype=self.parameters()[0].dtype)
        with T.no_grad():
            return self.forward(T.tensor(wave)).data


# ---------------------------------------------------------------------------
# Closed-form parameter counts. Each helper mirrors one module's construction
# arithmetically; equality with the instantiated model is enforced by tests.
# ---------------------------------------------------------------------------

def _linear(i, o):
    return i * o + o


def _conv_unit(d):
    # LayerNorm (2d) + linear (d^2 + d) + depthwise kernel-3 conv (3d + d)
    return 2 * d + _linear(d, d) + 4 * d


def attention_block_count(att: AttentionConfig):
    n, d, hidden = att.embed_dim, att.qk_dim, att.expansion * att.embed_dim
    return (2 * n + _conv_unit(n) + 2 * _linear(n, d)
            + 2 * _linear(n, hidden) + _linear(hidden, n))


def recurrent_module_count(rec: RecurrentConfig):
    d = rec.working_dim
    total = 0
    if rec.bottleneck_on:
        n = rec.embed_dim
        total += _linear(n, d) + d + 2 * d        # down proj + PReLU + LayerNorm
        total += 2 * d + _linear(d, n)            # out LayerNorm + up proj
    if rec.gate_on:
        branch = _conv_unit(d) if rec.conv_u_on else _linear(d, d)
        total += 2 * branch
    total += _linear(d, d) + d                    # memory FFN + PReLU
    for level in range(1, rec.memory_blocks + 1):
        in_ch = level * d if rec.dense_on else d
        conv_w = d * (in_ch // rec.groups) * rec.memory_kernel + d
        total += conv_w + 2 * d + d               # conv + channel affine + PReLU
    proj_in = (rec.memory_blocks + 1) * d if rec.dense_on else d
    total += _linear(proj_in, d)
    return total


def param_count(cfg: ModelConfig):
    """Per-module parameter counts plus the grand total."""
    cfg.validate()
    n, c, k = cfg.embed_dim, cfg.num_sources, cfg.encoder_kernel
    r = cfg.num_blocks
    att = attention_block_count(cfg.attention)
    rec = recurrent_module_count(cfg.recurrent) if cfg.hybrid_on else 0
    rows = {
        "encoder": n * k + n,
        "masknet.input": _linear(n, n) + 2 * n,
        "masknet.attention": r * att,
        "masknet.recurrent": r * rec,
        "masknet.head": _linear(n, c * n),
        "decoder": n * k + 1,
    }
    rows["total"] = sum(rows.values())
    return rows
