"""Plain-text configuration files and checkpoint config serialization.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Unknown keys are rejected outright — a misspelled hyperparameter must fail
loudly, not fall back to a default. The full schema (types, defaults,
meanings) is in ``SCHEMA`` and reproduced in the README.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .separator import ModelConfig, build_config


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_groups(text):
    if text.lower() == "depthwise":
        return 0
    return int(text)


@dataclass
class Field:
    parse: callable
    default: object
    help: str


SCHEMA = {
    # model architecture
    "num_sources":    Field(int, 2, "number of sources C to separate"),
    "encoder_kernel": Field(int, 8, "encoder filterbank kernel (stride is half)"),
    "embed_dim":      Field(int, 64, "embedding width N"),
    "num_blocks":     Field(int, 2, "number of stacked hybrid blocks R"),
    "chunk_size":     Field(int, 8, "local-attention chunk length K"),
    "qk_dim":         Field(int, 32, "query/key projection width"),
    "expansion":      Field(int, 2, "value/gate hidden expansion factor"),
    "rotary":         Field(_parse_bool, True, "positional phase rotation in attention"),
    "hybrid":         Field(_parse_bool, True, "attach a memory module to every block"),
    "bottleneck_dim": Field(int, 32, "memory module bottleneck width N'"),
    "memory_blocks":  Field(int, 2, "dilated memory depth L"),
    "memory_kernel":  Field(int, 5, "memory convolution width along time (odd)"),
    "memory_groups":  Field(_parse_groups, 0, "channel groups in memory convs; 'depthwise' or 0 = one per channel"),
    "dilation":       Field(_parse_bool, True, "double the memory dilation per block"),
    "dense":          Field(_parse_bool, True, "dense connections between memory blocks"),
    "gate":           Field(_parse_bool, True, "gated combination in the memory unit"),
    "conv_u":         Field(_parse_bool, True, "convolutional (vs linear) gate/value branches"),
    "bottleneck":     Field(_parse_bool, True, "bottleneck and output layers in the memory module"),
    # optimization
    "lr":             Field(float, 15e-5, "Adam learning rate"),
    "plateau_epochs": Field(int, 85, "epochs at constant lr before the first decay"),
    "decay_window":   Field(int, 85, "epochs between subsequent decays"),
    "decay_factor":   Field(float, 0.5, "multiplicative lr decay"),
    "clip_norm":      Field(float, 5.0, "global l2 gradient clip"),
    "max_epochs":     Field(int, 200, "training epoch budget"),
    "batch_size":     Field(int, 1, "mixtures per optimizer step"),
    "seed":           Field(int, 0, "master seed for init and data"),
    "target_si_sdri": Field(float, 0.0, "stop early once train SI-SDRi reaches this (0 = off)"),
    # training data
    "sample_rate":    Field(int, 8000, "corpus sample rate in Hz"),
    "train_count":    Field(int, 4, "number of training mixtures"),
    "duration_s":     Field(float, 0.25, "training clip duration in seconds"),
    "dynamic_mixing": Field(_parse_bool, False, "resample gains/pairings every epoch"),
}

_MODEL_KEYS = ("num_sources", "encoder_kernel", "embed_dim", "num_blocks",
               "chunk_size", "qk_dim", "expansion", "rotary", "hybrid",
               "bottleneck_dim", "memory_blocks", "memory_kernel",
               "memory_groups", "dilation", "dense", "gate", "conv_u",
               "bottleneck")


@dataclass
class TrainConfig:
    model: ModelConfig
    lr: float = 15e-5
    plateau_epochs: int = 85
    decay_window: int = 85
    decay_factor: float = 0.5
    clip_norm: float = 5.0
    max_epochs: int = 200
    batch_size: int = 1
    seed: int = 0
    target_si_sdri: float = 0.0
    sample_rate: int = 8000
    train_count: int = 4
    duration_s: float = 0.25
    dynamic_mixing: bool = False

    def validate(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 < self.decay_factor < 1.0:
            raise ConfigError(f"decay_factor must be in (0, 1), got {self.decay_factor}")
        if self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ConfigError("max_epochs and batch_size must be >= 1")
        self.model.validate()
        return self


def parse_config_text(text, path="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = SCHEMA[key].parse(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def _to_train_config(values):
    merged = {key: spec.default for key, spec in SCHEMA.items()}
    merged.update(values)
    model = build_config(
        num_sources=merged["num_sources"],
        encoder_kernel=merged["encoder_kernel"],
        embed_dim=merged["embed_dim"],
        num_blocks=merged["num_blocks"],
        chunk_size=merged["chunk_size"],
        qk_dim=merged["qk_dim"],
        expansion=merged["expansion"],
        rotary_on=merged["rotary"],
        hybrid_on=merged["hybrid"],
        bottleneck_dim=merged["bottleneck_dim"],
        memory_blocks=merged["memory_blocks"],
        memory_kernel=merged["memory_kernel"],
        memory_groups=merged["memory_groups"],
        dilation_on=merged["dilation"],
        dense_on=merged["dense"],
        gate_on=merged["gate"],
        conv_u_on=merged["conv_u"],
        bottleneck_on=merged["bottleneck"],
    )
    return TrainConfig(
        model=model,
        lr=merged["lr"],
        plateau_epochs=merged["plateau_epochs"],
        decay_window=merged["decay_window"],
        decay_factor=merged["decay_factor"],
        clip_norm=merged["clip_norm"],
        max_epochs=merged["max_epochs"],
        batch_size=merged["batch_size"],
        seed=merged["seed"],
        target_si_sdri=merged["target_si_sdri"],
        sample_rate=merged["sample_rate"],
        train_count=merged["train_count"],
        duration_s=merged["duration_s"],
        dynamic_mixing=merged["dynamic_mixing"],
    ).validate()


def load_train_config(path):
    text = Path(path).read_text(encoding="utf-8")
    return _to_train_config(parse_config_text(text, str(path)))


def load_model_config(path):
    return load_train_config(path).model


# ---------------------------------------------------------------------------
# ModelConfig <-> checkpoint entries. Every field is a small integer, boolean
# or exactly representable value, so a float32 scalar per key is lossless.
# ---------------------------------------------------------------------------

def model_config_to_entries(cfg: ModelConfig):
    att, rec = cfg.attention, cfg.recurrent
    flat = {
        "num_sources": cfg.num_sources,
        "encoder_kernel": cfg.encoder_kernel,
        "embed_dim": cfg.embed_dim,
        "num_blocks": cfg.num_blocks,
        "chunk_size": att.chunk_size,
        "qk_dim": att.qk_dim,
        "expansion": att.expansion,
        "rotary": att.rotary_on,
        "hybrid": cfg.hybrid_on,
        "bottleneck_dim": rec.bottleneck_dim,
        "memory_blocks": rec.memory_blocks,
        "memory_kernel": rec.memory_kernel,
        "memory_groups": rec.memory_groups,
        "dilation": rec.dilation_on,
        "dense": rec.dense_on,
        "gate": rec.gate_on,
        "conv_u": rec.conv_u_on,
        "bottleneck": rec.bottleneck_on,
    }
    return {f"config.{key}": np.asarray(float(flat[key]), dtype=np.float32)
            for key in _MODEL_KEYS}


def entries_to_model_config(entries):
    from .errors import CheckpointMismatchError

    values = {}
    for key in _MODEL_KEYS:
        name = f"config.{key}"
        if name not in entries:
            raise CheckpointMismatchError(f"checkpoint missing config entry {name!r}")
        raw = float(np.asarray(entries[name]).reshape(()))
        parse = SCHEMA[key].parse
        if parse is _parse_bool:
            values[key] = bool(raw)
        elif parse is float:
            values[key] = raw
        else:
            values[key] = int(round(raw))
    return build_config(
        num_sources=values["num_sources"],
        encoder_kernel=values["encoder_kernel"],
        embed_dim=values["embed_dim"],
        num_blocks=values["num_blocks"],
        chunk_size=values["chunk_size"],
        qk_dim=values["qk_dim"],
        expansion=values["expansion"],
        rotary_on=values["rotary"],
        hybrid_on=values["hybrid"],
        bottleneck_dim=values["bottleneck_dim"],
        memory_blocks=values["memory_blocks"],
        memory_kernel=values["memory_kernel"],
        memory_groups=values["memory_groups"],
        dilation_on=values["dilation"],
        dense_on=values["dense"],
        gate_on=values["gate"],
        conv_u_on=values["conv_u"],
        bottleneck_on=values["bottleneck"],
    )
