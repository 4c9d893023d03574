"""Mono 16-bit PCM WAV reading and writing.

Readers walk the RIFF chunk list and reject anything that is not mono PCM16;
every rejection names the offending header field. Samples map to floats via
x / 32768; writing quantizes round-half-away-from-zero and clamps, so a
write/read round trip moves each sample by at most 1/32768.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import WavFormatError

_SCALE = 32768.0


def wav_write(path, samples, sample_rate):
    """Write float samples in [-1, 1) as mono PCM16LE."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise WavFormatError(f"wav_write needs a mono 1-D signal, got shape {x.shape}")
    scaled = x * _SCALE
    q = np.where(scaled >= 0, np.floor(scaled + 0.5), np.ceil(scaled - 0.5))
    q = np.clip(q, -32768, 32767).astype("<i2")
    data = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16,
        1,                      # PCM format tag
        1,                      # mono
        sample_rate,
        sample_rate * 2,        # byte rate
        2,                      # block align
        16,                     # bits per sample
        b"data", len(data),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)


def wav_read(path):
    """Read a mono PCM16 WAV; returns (float32 samples in [-1, 1), rate)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise WavFormatError("file too short for a RIFF header")
    if raw[0:4] != b"RIFF":
        raise WavFormatError(f"bad chunk id: expected b'RIFF', got {raw[0:4]!r}")
    if raw[8:12] != b"WAVE":
        raise WavFormatError(f"bad RIFF form type: expected b'WAVE', got {raw[8:12]!r}")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"chunk {cid!r} truncated: header says {size} bytes")
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)   # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if data is None:
        raise WavFormatError("missing data chunk")
    if len(fmt) < 16:
        raise WavFormatError(f"fmt chunk too short: {len(fmt)} bytes")
    format_tag, channels, sample_rate, _, block_align, bits = struct.unpack_from(
        "<HHIIHH", fmt, 0)
    if format_tag != 1:
        raise WavFormatError(f"format_tag: only PCM (1) supported, got {format_tag}")
    if channels != 1:
        raise WavFormatError(f"channels: only mono supported, got {channels}")
    if bits != 16:
        raise WavFormatError(f"bits_per_sample: only 16 supported, got {bits}")
    if block_align != 2:
        raise WavFormatError(f"block_align: expected 2 for mono PCM16, got {block_align}")
    if len(data) % 2:
        raise WavFormatError(f"data chunk size {len(data)} is not sample-aligned")

    ints = np.frombuffer(data, dtype="<i2")
    return (ints.astype(np.float32) / np.float32(_SCALE), sample_rate)
