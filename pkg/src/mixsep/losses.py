"""Scale-invariant SDR training loss, permutation search, and evaluation.

The SDR here uses the pure projection form: the reference-aligned component
s = (<est, ref> / ||ref||^2) ref, no mean subtraction, and epsilon = 1e-8 in
both numerator and denominator, which caps the value near +/-80 dB on unit-
scale signals and keeps perfect reconstructions finite.
"""

import json
import time
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import functional as F
from . import tensor as T
from .errors import DataError, ShapeError
from .tensor import Tensor

EPS = 1e-8
MAX_PIT_SOURCES = 5


def si_sdr(est, ref, eps=EPS):
    """Scale-invariant SDR in dB as a differentiable scalar tensor.

    ``est`` may be a graph tensor; ``ref`` is treated as a constant.
    """
    est = est if isinstance(est, Tensor) else T.tensor(est)
    ref_arr = np.asarray(ref.data if isinstance(ref, Tensor) else ref,
                         dtype=est.dtype)
    if est.ndim != 1 or ref_arr.ndim != 1 or est.shape[0] != ref_arr.shape[0]:
        raise ShapeError(
            f"si_sdr needs equal-length 1-D signals, got {est.shape} vs {ref_arr.shape}")
    if est.shape[0] < 1:
        raise ShapeError("si_sdr needs non-empty signals")
    ref_energy = float(np.dot(ref_arr, ref_arr))
    if ref_energy == 0.0:
        raise DataError("si_sdr reference signal is identically zero")
    ref_t = T.tensor(ref_arr)
    scale = F.dot(est, ref_t) * (1.0 / ref_energy)
    target = scale * ref_t
    residual = est - target
    ratio = (F.squared_norm(target) + eps) / (F.squared_norm(residual) + eps)
    return F.log10_db(ratio)


def si_sdr_value(est, ref, eps=EPS):
    with T.no_grad():
        return si_sdr(np.asarray(est, dtype=np.float64), ref, eps).item()


def pit_loss(est, refs, eps=EPS):
    """Permutation-invariant negative SI-SDR.

    est:  (C, T) tensor of estimates (graph-capable).
    refs: (C, T) references.
    Returns (loss, perm): loss = -max over assignments of the mean SI-SDR,
    perm[i] = index of the reference assigned to estimate i. Exhaustive
    search over all C! assignments.
    """
    est = est if isinstance(est, Tensor) else T.tensor(est)
    refs_arr = np.asarray(refs.data if isinstance(refs, Tensor) else refs)
    c = est.shape[0]
    if c < 2:
        raise ShapeError(f"pit_loss needs at least 2 sources, got {c}")
    if c > MAX_PIT_SOURCES:
        raise DataError(
            f"pit_loss supports at most {MAX_PIT_SOURCES} sources (got {c}); "
            f"exhaustive permutation search would be too large")
    if refs_arr.shape != est.shape:
        raise ShapeError(f"pit_loss shape mismatch: {est.shape} vs {refs_arr.shape}")
    t = est.shape[1]
    rows = [T.reshape(T.narrow(est, 0, i, 1), (t,)) for i in range(c)]
    scores = [[si_sdr(rows[i], refs_arr[j], eps) for j in range(c)]
              for i in range(c)]
    best_perm, best_value = None, None
    for perm in permutations(range(c)):
        value = sum(float(scores[i][perm[i]].data) for i in range(c)) / c
        if best_value is None or value > best_value:
            best_perm, best_value = perm, value
    picked = [scores[i][best_perm[i]] for i in range(c)]
    mean_score = sum(picked[1:], picked[0]) * (1.0 / c)
    return -mean_score, best_perm


def si_sdri(est, refs, mix, eps=EPS):
    """Best-permutation mean SI-SDR of the estimates minus the mixture's.

    Returns (improvement_db, per_source_db, perm).
    """
    est = np.asarray(est, dtype=np.float64)
    refs = np.asarray(refs, dtype=np.float64)
    mix = np.asarray(mix, dtype=np.float64)
    c = refs.shape[0]
    with T.no_grad():
        table = [[si_sdr(est[i], refs[j], eps).item() for j in range(c)]
                 for i in range(c)]
        mix_scores = [si_sdr(mix, refs[j], eps).item() for j in range(c)]
    best_perm, best = None, None
    for perm in permutations(range(c)):
        value = sum(table[i][perm[i]] for i in range(c)) / c
        if best is None or value > best:
            best_perm, best = perm, value
    per_source = [table[i][best_perm[i]] for i in range(c)]
    return best - sum(mix_scores) / c, per_source, best_perm


@dataclass
class EvalReport:
    """One evaluated mixture. JSON line field order: index, si_sdr,
    permutation, si_sdri, rtf, error."""

    index: int
    si_sdr: list
    permutation: list
    si_sdri: float
    rtf: float = 0.0
    error: str = ""

    def to_json_line(self):
        return json.dumps({
            "index": self.index,
            "si_sdr": [round(v, 6) for v in self.si_sdr],
            "permutation": list(self.permutation),
            "si_sdri": round(self.si_sdri, 6),
            "rtf": round(self.rtf, 6),
            "error": self.error,
        })


def measure_rtf(model, clips, sample_rate):
    """Wall-clock separation time over total audio duration.

    One untimed warm-up pass (also absorbs JIT compilation); excludes any
    file I/O by taking in-memory clips.
    """
    if not clips:
        raise DataError("measure_rtf needs at least one clip")
    model.separate(clips[0])
    total_audio = sum(len(c) for c in clips) / sample_rate
    start = time.perf_counter()
    for clip in clips:
        model.separate(clip)
    elapsed = time.perf_counter() - start
    return elapsed / total_audio
