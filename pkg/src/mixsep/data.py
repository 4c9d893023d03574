"""Synthetic mixture corpora and dynamic-mixing augmentation.

Sources imitate distinct "speakers" by confining each one to its own
frequency band: a few amplitude-modulated sines inside the band plus a
low-level smoothed noise floor. Disjoint bands make mixtures separable by
construction while still overlapping fully in time. Everything is
reproducible from (spec, seed).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class MixtureSample:
    mix: np.ndarray                 # (T,) float32, exact sum of sources
    sources: list                   # C arrays of (T,) float32
    sample_rate: int = 8000


@dataclass
class CorpusSpec:
    count: int
    duration_s: float
    num_sources: int = 2
    seed: int = 0
    sample_rate: int = 8000
    tones_per_source: int = 3
    mod_rate_hz: tuple = (2.0, 8.0)
    noise_level: float = 0.003
    band_low_hz: float = 300.0
    band_margin_hz: float = 150.0

    def validate(self):
        if self.count < 1:
            raise DataError(f"corpus count must be >= 1, got {self.count}")
        if self.duration_s <= 0:
            raise DataError(f"duration_s must be positive, got {self.duration_s}")
        return self


def speaker_bands(spec: CorpusSpec):
    """Disjoint (low, high) frequency bands, one per source."""
    nyquist = spec.sample_rate / 2.0
    usable = nyquist * 0.9 - spec.band_low_hz
    width = usable / spec.num_sources - spec.band_margin_hz
    if width <= 0:
        raise DataError(
            f"cannot fit {spec.num_sources} disjoint bands below {nyquist} Hz")
    bands = []
    for i in range(spec.num_sources):
        lo = spec.band_low_hz + i * (width + spec.band_margin_hz)
        bands.append((lo, lo + width))
    return bands


def _smooth_noise(rng, n, taps=9):
    """White noise through a short moving-average filter (crude lowpass)."""
    raw = rng.standard_normal(n + taps - 1)
    kernel = np.ones(taps) / taps
    return np.convolve(raw, kernel, mode="valid")


def synth_source(rng, band, num_samples, sample_rate, spec: CorpusSpec):
    lo, hi = band
    t = np.arange(num_samples) / sample_rate
    wave = np.zeros(num_samples)
    for _ in range(spec.tones_per_source):
        freq = rng.uniform(lo, hi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        mod_rate = rng.uniform(*spec.mod_rate_hz)
        mod_phase = rng.uniform(0.0, 2.0 * np.pi)
        depth = rng.uniform(0.4, 0.9)
        envelope = 1.0 + depth * np.sin(2.0 * np.pi * mod_rate * t + mod_phase)
        wave += envelope * np.sin(2.0 * np.pi * freq * t + phase)
    peak = np.max(np.abs(wave))
    wave = 0.35 * wave / peak
    wave += spec.noise_level * _smooth_noise(rng, num_samples)
    return wave.astype(np.float32)


def synth_corpus(spec: CorpusSpec):
    """Deterministic list of MixtureSample; mix is the exact float32 sum."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    bands = speaker_bands(spec)
    num_samples = int(round(spec.duration_s * spec.sample_rate))
    samples = []
    for _ in range(spec.count):
        sources = [synth_source(rng, band, num_samples, spec.sample_rate, spec)
                   for band in bands]
        mix = sources[0].copy()
        for src in sources[1:]:
            mix += src
        samples.append(MixtureSample(mix, sources, spec.sample_rate))
    return samples


def source_pool(spec: CorpusSpec, streams_per_speaker=4, stream_duration_s=None):
    """Per-speaker lists of source streams for dynamic mixing."""
    spec.validate()
    rng = np.random.default_rng(spec.seed + 0x5EED)
    bands = speaker_bands(spec)
    dur = stream_duration_s if stream_duration_s is not None else 2.0 * spec.duration_s
    n = int(round(dur * spec.sample_rate))
    return [[synth_source(rng, band, n, spec.sample_rate, spec)
             for _ in range(streams_per_speaker)] for band in bands]


def dynamic_mix(pool, num_sources, num_samples, rng, max_gain_db=5.0,
                sample_rate=8000):
    """Fresh mixture: C sources from distinct speakers, random gain in
    [-max_gain_db, +max_gain_db] dB, random crop alignment, exact sum."""
    if len(pool) < num_sources:
        raise DataError(
            f"dynamic_mix needs >= {num_sources} speakers in the pool, got {len(pool)}")
    speakers = rng.choice(len(pool), size=num_sources, replace=False)
    sources = []
    for spk in speakers:
        stream = pool[spk][rng.integers(len(pool[spk]))]
        if len(stream) < num_samples:
            raise DataError(
                f"pool stream too short: {len(stream)} < {num_samples} samples")
        offset = rng.integers(len(stream) - num_samples + 1)
        gain_db = rng.uniform(-max_gain_db, max_gain_db)
        gain = 10.0 ** (gain_db / 20.0)
        sources.append((gain * stream[offset:offset + num_samples]).astype(np.float32))
    mix = sources[0].copy()
    for src in sources[1:]:
        mix += src
    return MixtureSample(mix, sources, sample_rate)


# ---------------------------------------------------------------------------
# On-disk corpora: WAV files plus a JSON-lines manifest. Each line:
#   {"mix": path, "sources": [path, ...]}   (paths relative to the manifest)
# ---------------------------------------------------------------------------

def write_corpus(samples, out_dir):
    from .wavio import wav_write

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for i, sample in enumerate(samples):
            mix_name = f"sample_{i:04d}_mix.wav"
            # keep quantized files within [-1, 1)
            peak = max(float(np.max(np.abs(sample.mix))), 1.0)
            wav_write(out_dir / mix_name, sample.mix / peak, sample.sample_rate)
            src_names = []
            for j, src in enumerate(sample.sources):
                name = f"sample_{i:04d}_src{j + 1}.wav"
                wav_write(out_dir / name, src / peak, sample.sample_rate)
                src_names.append(name)
            fh.write(json.dumps({"mix": mix_name, "sources": src_names}) + "\n")
    return manifest_path


def load_manifest(path):
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "mix" not in rec or "sources" not in rec:
                raise DataError(f"manifest line missing mix/sources: {line[:80]}")
            entries.append(rec)
    return entries
