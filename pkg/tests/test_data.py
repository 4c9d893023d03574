"""Synthetic corpus construction and dynamic mixing."""

import numpy as np
import pytest

from mixsep.data import (CorpusSpec, dynamic_mix, load_manifest, source_pool,
                         speaker_bands, synth_corpus, write_corpus)
from mixsep.errors import DataError


class TestSynthCorpus:
    def test_constructive_properties(self):
        spec = CorpusSpec(count=3, duration_s=1.0, num_sources=2, seed=7)
        samples = synth_corpus(spec)
        assert len(samples) == 3
        for sample in samples:
            assert len(sample.mix) == 8000
            assert all(len(s) == 8000 for s in sample.sources)
            exact = sample.sources[0] + sample.sources[1]
            np.testing.assert_array_equal(sample.mix, exact)

    def test_deterministic_given_seed(self):
        spec = CorpusSpec(count=2, duration_s=0.5, seed=11)
        a = synth_corpus(spec)
        b = synth_corpus(CorpusSpec(count=2, duration_s=0.5, seed=11))
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.mix, sb.mix)

    def test_different_seed_differs(self):
        a = synth_corpus(CorpusSpec(count=1, duration_s=0.5, seed=1))
        b = synth_corpus(CorpusSpec(count=1, duration_s=0.5, seed=2))
        assert not np.array_equal(a[0].mix, b[0].mix)

    def test_sources_near_orthogonal(self):
        spec = CorpusSpec(count=4, duration_s=1.0, num_sources=2, seed=3)
        for sample in synth_corpus(spec):
            s1, s2 = (s.astype(np.float64) for s in sample.sources)
            cos = abs(np.dot(s1, s2)) / (np.linalg.norm(s1) * np.linalg.norm(s2))
            assert cos < 0.1

    def test_bands_disjoint(self):
        spec = CorpusSpec(count=1, duration_s=0.1, num_sources=3)
        bands = speaker_bands(spec)
        for (lo1, hi1), (lo2, hi2) in zip(bands, bands[1:]):
            assert hi1 < lo2

    def test_invalid_spec(self):
        with pytest.raises(DataError):
            synth_corpus(CorpusSpec(count=0, duration_s=1.0))
        with pytest.raises(DataError):
            synth_corpus(CorpusSpec(count=1, duration_s=-1.0))


class TestDynamicMix:
    def _pool(self, seed=0):
        spec = CorpusSpec(count=1, duration_s=0.5, num_sources=2, seed=seed)
        return source_pool(spec, streams_per_speaker=3)

    def test_exact_gain_scaled_sum(self):
        pool = self._pool()
        sample = dynamic_mix(pool, 2, 2000, np.random.default_rng(0))
        exact = sample.sources[0] + sample.sources[1]
        np.testing.assert_array_equal(sample.mix, exact)
        assert len(sample.mix) == 2000

    def test_rng_state_changes_output(self):
        pool = self._pool()
        a = dynamic_mix(pool, 2, 2000, np.random.default_rng(1))
        b = dynamic_mix(pool, 2, 2000, np.random.default_rng(2))
        assert not np.array_equal(a.mix, b.mix)

    def test_gain_distribution_within_bounds(self):
        pool = self._pool()
        rng = np.random.default_rng(3)
        base_norms = {}
        for spk, streams in enumerate(pool):
            for i, s in enumerate(streams):
                base_norms[(spk, i)] = np.linalg.norm(s[:2000].astype(np.float64))
        max_gain = 10 ** (5.0 / 20.0)
        for _ in range(1000):
            sample = dynamic_mix(pool, 2, 2000, rng)
            for src in sample.sources:
                norm = np.linalg.norm(src.astype(np.float64))
                candidates = [norm / b for b in base_norms.values()]
                ratio = min(candidates, key=lambda r: abs(np.log(r)))
                # crop offset changes the norm slightly; allow 30% slack
                assert ratio < max_gain * 1.3
                assert ratio > (1.0 / max_gain) / 1.3

    def test_pool_too_small(self):
        pool = self._pool()
        with pytest.raises(DataError, match="speakers"):
            dynamic_mix(pool, 3, 1000, np.random.default_rng(0))

    def test_stream_too_short(self):
        pool = self._pool()
        with pytest.raises(DataError, match="too short"):
            dynamic_mix(pool, 2, 10_000_000, np.random.default_rng(0))


class TestCorpusOnDisk:
    def test_round_trip_manifest(self, tmp_path):
        spec = CorpusSpec(count=2, duration_s=0.25, seed=5)
        manifest = write_corpus(synth_corpus(spec), tmp_path)
        entries = load_manifest(manifest)
        assert len(entries) == 2
        for entry in entries:
            assert (tmp_path / entry["mix"]).exists()
            assert len(entry["sources"]) == 2
            for src in entry["sources"]:
                assert (tmp_path / src).exists()

    def test_bad_manifest_line(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"mix": "a.wav"}\n')
        with pytest.raises(DataError, match="sources"):
            load_manifest(path)
