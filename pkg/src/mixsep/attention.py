"""Joint local-global self-attention over encoded sequences.

One block runs two branches from shared projections: exact softmax attention
inside non-overlapping chunks of the sequence, and a linearized relu-feature
attention across the whole sequence, summed, gated elementwise and projected
back onto a residual path. Cost is O(S * K) + O(S) in sequence length.
"""

from dataclasses import dataclass

import numpy as np

from . import functional as F
from . import nn
from . import tensor as T
from .errors import ConfigError
from .profiling import profiler

NEG_INF_LOGIT = -1e9  # masked local-attention logits; underflows to weight 0


@dataclass
class AttentionConfig:
    embed_dim: int
    chunk_size: int
    qk_dim: int = 128
    expansion: int = 2
    rotary_on: bool = True

    def validate(self):
        if self.embed_dim < 1 or self.chunk_size < 1 or self.qk_dim < 1:
            raise ConfigError(
                f"attention dims must be positive: embed_dim={self.embed_dim}, "
                f"chunk_size={self.chunk_size}, qk_dim={self.qk_dim}")
        if self.qk_dim % 2:
            raise ConfigError(f"qk_dim must be even for phase rotation, got {self.qk_dim}")
        if self.expansion < 1:
            raise ConfigError(f"expansion must be >= 1, got {self.expansion}")
        return self


def chunk_split(x, chunk_size):
    """(S, D) -> ((nc, K, D), pad_len) with zero-padded tail, nc = ceil(S/K)."""
    s, d = x.shape
    nc = -(-s // chunk_size)
    pad_len = nc * chunk_size - s
    if pad_len:
        x = T.pad(x, ((0, pad_len), (0, 0)))
    return T.reshape(x, (nc, chunk_size, d)), pad_len


def chunk_merge(chunks, seq_len):
    """Inverse of chunk_split: (nc, K, D) -> (S, D), dropping tail padding."""
    nc, k, d = chunks.shape
    flat = T.reshape(chunks, (nc * k, d))
    if nc * k == seq_len:
        return flat
    return T.narrow(flat, 0, 0, seq_len)


def local_attention(q, k, v, key_mask=None):
    """Exact softmax attention inside each chunk of (nc, K, d) tensors.

    key_mask: optional (nc, 1, K) additive logits (0 valid, large negative
    for padded keys). No interaction crosses chunk boundaries.
    """
    scale = 1.0 / np.sqrt(q.shape[-1])
    logits = T.matmul(q, T.transpose(k, (0, 2, 1))) * scale
    if key_mask is not None:
        logits = logits + key_mask
    return T.matmul(T.softmax(logits, axis=-1), v)


def global_linear_attention(q, k, v):
    """Linearized full-sequence attention with a relu feature map.

    Evaluates relu(q) @ (relu(k)^T @ v) / S — the key-value product first —
    so cost is O(S * d_qk * d_v) instead of O(S^2). Normalization is a fixed
    1/S, which stays finite even when every key feature is zero.
    """
    s = q.shape[0]
    kv = T.matmul(T.transpose(T.relu(k)), v)
    return T.matmul(T.relu(q), kv) * (1.0 / s)


def rotary_tables(positions, dim, dtype):
    """cos/sin tables for phase rotation: (len(positions), dim/2) each."""
    half = dim // 2
    inv_freq = 10000.0 ** (-np.arange(half, dtype=np.float64) / half)
    ang = np.asarray(positions, dtype=np.float64)[:, None] * inv_freq[None, :]
    return (T.tensor(np.cos(ang), dtype=dtype),
            T.tensor(np.sin(ang), dtype=dtype))


def apply_rotary(x, cos, sin):
    """Rotate feature pairs (first half, second half) by position-dependent
    phases; broadcasts over any leading chunk axis."""
    half = x.shape[-1] // 2
    x1 = T.narrow(x, x.ndim - 1, 0, half)
    x2 = T.narrow(x, x.ndim - 1, half, half)
    return T.concat([x1 * cos - x2 * sin, x1 * sin + x2 * cos], axis=-1)


class JointAttentionBlock(nn.Module):
    """Shape-preserving attention block on (S, N) sequences.

    Pre-norm, a convolutional preprocessing unit, shared single-head q/k
    projections, SiLU value and gate projections at ``expansion`` times the
    width, local + global attention summed, gated, projected, residual.
    """

    def __init__(self, cfg: AttentionConfig, rng=None, dtype=T.DTYPE):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        n, d, hidden = cfg.embed_dim, cfg.qk_dim, cfg.expansion * cfg.embed_dim
        rng = rng or np.random.default_rng()
        self.norm = nn.LayerNorm(n, dtype=dtype)
        self.conv_unit = nn.ConvUnit(n, rng=rng, dtype=dtype)
        self.q_proj = nn.Linear(n, d, rng=rng, dtype=dtype)
        self.k_proj = nn.Linear(n, d, rng=rng, dtype=dtype)
        self.v_proj = nn.Linear(n, hidden, rng=rng, dtype=dtype)
        self.gate_proj = nn.Linear(n, hidden, rng=rng, dtype=dtype)
        self.out_proj = nn.Linear(hidden, n, rng=rng, dtype=dtype)

    def _local_branch(self, q, k, v, seq_len):
        ck = self.cfg.chunk_size
        qc, pad_len = chunk_split(q, ck)
        kc, _ = chunk_split(k, ck)
        vc, _ = chunk_split(v, ck)
        if self.cfg.rotary_on:
            cos, sin = rotary_tables(np.arange(ck), self.cfg.qk_dim, q.dtype)
            qc = apply_rotary(qc, cos, sin)
            kc = apply_rotary(kc, cos, sin)
        key_mask = None
        if pad_len:
            nc = qc.shape[0]
            mask = np.zeros((nc, 1, ck), dtype=q.dtype)
            mask[-1, 0, ck - pad_len:] = NEG_INF_LOGIT
            key_mask = T.tensor(mask)
        out = local_attention(qc, kc, vc, key_mask)
        return chunk_merge(out, seq_len)

    def _global_branch(self, q, k, v, seq_len):
        if self.cfg.rotary_on:
            cos, sin = rotary_tables(np.arange(seq_len), self.cfg.qk_dim, q.dtype)
            q = apply_rotary(q, cos, sin)
            k = apply_rotary(k, cos, sin)
        return global_linear_attention(q, k, v)

    def forward(self, x):
        seq_len = x.shape[0]
        with profiler.section("attention.block"):
            h = self.conv_unit(self.norm(x))
            q = self.q_proj(h)
            k = self.k_proj(h)
            v = F.silu(self.v_proj(h))
            gate = F.silu(self.gate_proj(h))
            with profiler.section("attention.local"):
                a_local = self._local_branch(q, k, v, seq_len)
            with profiler.section("attention.global"):
                a_global = self._global_branch(q, k, v, seq_len)
            return x + self.out_proj(gate * (a_local + a_global))
