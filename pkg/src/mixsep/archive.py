"""Binary named-tensor archive with a bit-exact on-disk layout.

Layout (all integers little-endian):

    magic   4 bytes  "MFT2"
    version u32      currently 1
    count   u32      number of entries
    entry:  name_len u32, name UTF-8, dtype u8 (0 = float32),
            rank u32, dims u64 * rank, payload raw little-endian float32

Entries keep insertion order, names are unique, and save -> load -> save
reproduces the file byte for byte.
"""

import struct

import numpy as np

from .errors import ArchiveError, CheckpointMismatchError

MAGIC = b"MFT2"
VERSION = 1
DTYPE_F32 = 0


def save_archive(path, entries):
    """Write an ordered {name: float32 array} mapping."""
    names = list(entries)
    if len(set(names)) != len(names):
        raise ArchiveError("duplicate entry names in archive")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(names)))
        for name in names:
            arr = np.ascontiguousarray(entries[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BI", DTYPE_F32, arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def load_archive(path):
    """Read back an ordered {name: float32 array} mapping."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12:
        raise ArchiveError("archive too short for header")
    if raw[0:4] != MAGIC:
        raise ArchiveError(f"bad magic: expected {MAGIC!r}, got {raw[0:4]!r}")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ArchiveError(f"unsupported archive version {version}")
    entries = {}
    pos = 12
    for _ in range(count):
        if pos + 4 > len(raw):
            raise ArchiveError("truncated archive: entry header out of bounds")
        (name_len,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        name = raw[pos:pos + name_len].decode("utf-8")
        pos += name_len
        if pos + 5 > len(raw):
            raise ArchiveError(f"truncated archive at entry {name!r}")
        dtype_tag, rank = struct.unpack_from("<BI", raw, pos)
        pos += 5
        if dtype_tag != DTYPE_F32:
            raise ArchiveError(f"entry {name!r}: unknown dtype tag {dtype_tag}")
        if pos + 8 * rank > len(raw):
            raise ArchiveError(f"entry {name!r}: rank {rank} dims out of bounds")
        dims = struct.unpack_from(f"<{rank}Q", raw, pos) if rank else ()
        pos += 8 * rank
        n_bytes = 4 * int(np.prod(dims, dtype=np.int64))
        if pos + n_bytes > len(raw):
            raise ArchiveError(
                f"entry {name!r}: payload of {n_bytes} bytes exceeds file size")
        arr = np.frombuffer(raw[pos:pos + n_bytes], dtype="<f4").reshape(dims)
        pos += n_bytes
        if name in entries:
            raise ArchiveError(f"duplicate entry name {name!r}")
        entries[name] = arr.copy()
    if pos != len(raw):
        raise ArchiveError(f"{len(raw) - pos} trailing bytes after last entry")
    return entries


# ---------------------------------------------------------------------------
# Checkpoints: one archive holding the serialized model config (as scalar
# entries under config.*) followed by every model parameter by dotted name.
# ---------------------------------------------------------------------------

def save_checkpoint(path, model):
    from .config import model_config_to_entries

    entries = dict(model_config_to_entries(model.cfg))
    for name, p in model.named_parameters():
        entries[name] = p.data.astype(np.float32)
    save_archive(path, entries)


def load_checkpoint(path):
    """Returns (ModelConfig, {param name: float32 array})."""
    from .config import entries_to_model_config

    entries = load_archive(path)
    config_items = {k: v for k, v in entries.items() if k.startswith("config.")}
    params = {k: v for k, v in entries.items() if not k.startswith("config.")}
    cfg = entries_to_model_config(config_items)
    return cfg, params


def load_params_into(model, params):
    """Copy checkpoint arrays into the model, verifying names and shapes."""
    model_params = dict(model.named_parameters())
    for name in model_params:
        if name not in params:
            raise CheckpointMismatchError(f"checkpoint missing tensor {name!r}")
    for name in params:
        if name not in model_params:
            raise CheckpointMismatchError(f"checkpoint has unexpected tensor {name!r}")
    for name, p in model_params.items():
        arr = params[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise CheckpointMismatchError(
                f"tensor {name!r}: checkpoint shape {tuple(arr.shape)} != "
                f"model shape {tuple(p.data.shape)}")
        p.data = arr.astype(p.data.dtype)
        p.grad = None
    return model
