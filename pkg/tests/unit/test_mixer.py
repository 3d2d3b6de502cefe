"""Tests for multi-noise mixing and manifests."""

import json

import numpy as np
import pytest

from denoise import (
    AudioSignal,
    build_manifest,
    load_manifest,
    measured_snr_db,
    mix,
    save_manifest,
    synthesize,
    write_wav,
)
from denoise.errors import (
    CountTooSmall,
    DataError,
    EmptyCorpus,
    IoFailure,
    SilentClean,
    SilentNoiseMixture,
)
from denoise.mixer import entry_seed, resolve
from denoise.models import SNR_GRID_DB


@pytest.fixture
def wav_corpus(tmp_path, rng):
    """Three clean files and five noise files of different lengths."""
    root = tmp_path / "corpus"
    clean = []
    for i in range(3):
        path = root / "clean" / f"c{i}.wav"
        write_wav(AudioSignal(0.3 * rng.standard_normal(3000 + 500 * i)), path)
        clean.append(path)
    noises = []
    for i in range(5):
        path = root / "noise" / f"n{i}.wav"
        write_wav(AudioSignal(0.2 * rng.standard_normal(1000 + 700 * i)), path)
        noises.append(path)
    return root, clean, noises


class TestMix:
    """Tests for mix()."""

    def test_snr_accuracy_random_mixes(self):
        """Measured SNR matches the request over 1000 random mixes."""
        rng = np.random.default_rng(0)
        for _ in range(1000):
            clean = AudioSignal(rng.uniform(0.05, 0.5) * rng.standard_normal(800))
            noises = [
                AudioSignal(rng.standard_normal(int(rng.integers(50, 1600))))
                for _ in range(int(rng.integers(1, 5)))
            ]
            snr = float(rng.uniform(-10.0, 30.0))
            result = mix(clean, noises, snr, rng=rng)
            assert abs(measured_snr_db(clean, result.scaled_noise) - snr) < 0.01
            assert np.array_equal(
                result.noisy.samples - clean.samples, result.scaled_noise.samples
            )

    def test_length_follows_clean(self, rng):
        """Short noises are looped and long ones cropped."""
        clean = AudioSignal(rng.standard_normal(1000))
        result = mix(clean, [AudioSignal(rng.standard_normal(30))], 5.0, rng=rng)
        assert len(result.noisy) == 1000

    def test_looping_from_offset(self):
        """The noise starts at its offset and wraps around."""
        clean = AudioSignal(np.ones(6))
        noise = AudioSignal(np.array([1.0, 2.0, 3.0, 4.0]))
        result = mix(clean, [noise], 0.0, offsets=[2])
        pattern = result.scaled_noise.samples / result.gain
        assert np.allclose(pattern, [3.0, 4.0, 1.0, 2.0, 3.0, 4.0])

    def test_explicit_offsets_reproduce(self, rng):
        """Replaying the returned offsets gives the same mix."""
        clean = AudioSignal(rng.standard_normal(500))
        noises = [AudioSignal(rng.standard_normal(300)) for _ in range(3)]
        first = mix(clean, noises, 3.0, rng=rng)
        again = mix(clean, noises, 3.0, offsets=first.offsets)
        assert np.array_equal(first.noisy.samples, again.noisy.samples)

    def test_identical_noises_add_coherently(self, rng):
        """Two copies of one noise sum to four times its power."""
        clean = AudioSignal(rng.standard_normal(800))
        noise = AudioSignal(rng.standard_normal(800))
        single = mix(clean, [noise], 5.0, offsets=[0])
        double = mix(clean, [noise, noise], 5.0, offsets=[0, 0])
        single_power = np.mean((single.scaled_noise.samples / single.gain) ** 2)
        double_power = np.mean((double.scaled_noise.samples / double.gain) ** 2)
        assert double_power == pytest.approx(4.0 * single_power)
        assert double.gain == pytest.approx(single.gain / 2.0)
        assert measured_snr_db(clean, double.scaled_noise) == pytest.approx(5.0)

    def test_silent_clean(self, rng):
        """Silent speech has no defined SNR."""
        with pytest.raises(SilentClean):
            mix(AudioSignal(np.zeros(100)), [AudioSignal(rng.normal(size=50))], 0.0)

    def test_silent_noise(self, rng):
        """A silent noise mixture cannot be scaled."""
        with pytest.raises(SilentNoiseMixture):
            mix(AudioSignal(rng.normal(size=100)), [AudioSignal(np.zeros(50))], 0.0)

    @pytest.mark.parametrize("n_noises", [0, 5])
    def test_noise_count(self, rng, n_noises):
        """Between one and four noises are required."""
        noises = [AudioSignal(rng.normal(size=50)) for _ in range(n_noises)]
        with pytest.raises(DataError):
            mix(AudioSignal(rng.normal(size=100)), noises, 0.0)

    def test_offsets_length(self, rng):
        """One offset per noise."""
        with pytest.raises(DataError):
            mix(
                AudioSignal(rng.normal(size=100)),
                [AudioSignal(rng.normal(size=50))],
                0.0,
                offsets=[1, 2],
            )


class TestBuildManifest:
    """Tests for manifest generation."""

    def test_deterministic(self, wav_corpus):
        """The same seed gives the same entries."""
        root, clean, noises = wav_corpus
        a = build_manifest(clean, noises, "train", 10, 42, corpus_root=root)
        b = build_manifest(clean, noises, "train", 10, 42, corpus_root=root)
        assert [e.to_record() for e in a] == [e.to_record() for e in b]

    def test_prefix_stable(self, wav_corpus):
        """Entry i does not depend on the manifest size."""
        root, clean, noises = wav_corpus
        short = build_manifest(clean, noises, "train", 4, 1, corpus_root=root)
        long = build_manifest(clean, noises, "train", 9, 1, corpus_root=root)
        assert [e.to_record() for e in short] == [
            e.to_record() for e in long.entries[:4]
        ]

    def test_entry_fields(self, wav_corpus):
        """Entries respect counts, ranges and path conventions."""
        root, clean, noises = wav_corpus
        manifest = build_manifest(clean, noises, "train", 40, 3, corpus_root=root)
        for index, entry in enumerate(manifest):
            assert entry.utterance_id == f"train_{index:05d}"
            assert entry.clean == f"clean/c{index % 3}.wav"
            assert 1 <= len(entry.noises) <= 4
            assert len(set(entry.noises)) == len(entry.noises)
            assert -5.0 <= entry.snr_db <= 20.0
            assert entry.seed == entry_seed(3, index)
            for name, offset in zip(entry.noises, entry.offsets):
                n = int(name[len("noise/n") : -len(".wav")])
                assert 0 <= offset < 1000 + 700 * n

    def test_train_draw_statistics(self, wav_corpus):
        """Train SNRs average 7.5 dB and noise counts are uniform on 1..4."""
        root, clean, noises = wav_corpus
        n = 10_000
        manifest = build_manifest(clean, noises, "train", n, 11, corpus_root=root)
        snrs = np.array([e.snr_db for e in manifest])
        assert abs(snrs.mean() - 7.5) < 0.5
        counts = np.bincount([len(e.noises) for e in manifest], minlength=5)[1:]
        sigma = np.sqrt(n * 0.25 * 0.75)
        assert np.all(np.abs(counts - n / 4) < 4 * sigma)

    def test_test_split_cycles_grid(self, wav_corpus):
        """Test SNRs walk the grid in order."""
        root, clean, noises = wav_corpus
        manifest = build_manifest(clean, noises, "test", 12, 0, corpus_root=root)
        assert [e.snr_db for e in manifest] == list(SNR_GRID_DB) * 2

    def test_noise_count_capped_by_corpus(self, wav_corpus):
        """With one noise file every entry uses exactly that noise."""
        root, clean, noises = wav_corpus
        manifest = build_manifest(clean, noises[:1], "train", 20, 0, corpus_root=root)
        assert all(e.noises == ["noise/n0.wav"] for e in manifest)

    def test_empty_corpus(self, wav_corpus):
        """Empty clean or noise lists are rejected."""
        root, clean, noises = wav_corpus
        with pytest.raises(EmptyCorpus):
            build_manifest([], noises, "train", 3, 0)
        with pytest.raises(EmptyCorpus):
            build_manifest(clean, [], "train", 3, 0)

    def test_count_too_small(self, wav_corpus):
        """Test manifests must cover the whole SNR grid."""
        root, clean, noises = wav_corpus
        with pytest.raises(CountTooSmall):
            build_manifest(clean, noises, "test", 5, 0)
        with pytest.raises(CountTooSmall):
            build_manifest(clean, noises, "train", 0, 0)


class TestManifestFiles:
    """Tests for manifest persistence and replay."""

    def test_save_load(self, tmp_path, wav_corpus):
        """A saved manifest loads back entry for entry."""
        root, clean, noises = wav_corpus
        manifest = build_manifest(clean, noises, "validation", 6, 5, corpus_root=root)
        path = tmp_path / "validation.jsonl"
        save_manifest(manifest, path)
        loaded = load_manifest(path)
        assert loaded.split == "validation"
        assert loaded.global_seed == 5
        assert loaded.corpus_root == root.as_posix()
        assert [e.to_record() for e in loaded] == [e.to_record() for e in manifest]

    def test_header_line(self, tmp_path, wav_corpus):
        """The first line describes the manifest."""
        root, clean, noises = wav_corpus
        path = tmp_path / "m.jsonl"
        save_manifest(build_manifest(clean, noises, "train", 2, 0, root), path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert json.loads(lines[0])["manifest"]["split"] == "train"
        assert set(json.loads(lines[1])) == {
            "id",
            "clean",
            "noises",
            "snr_db",
            "offsets",
            "seed",
        }

    def test_missing_header(self, tmp_path):
        """Files without a header line are rejected."""
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x"}\n')
        with pytest.raises(DataError):
            load_manifest(path)

    def test_invalid_json(self, tmp_path):
        """Malformed JSON is a data error."""
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(DataError):
            load_manifest(path)

    def test_missing_file(self, tmp_path):
        """A missing manifest raises IoFailure."""
        with pytest.raises(IoFailure):
            load_manifest(tmp_path / "none.jsonl")

    def test_synthesize_matches_request(self, wav_corpus):
        """Replaying an entry hits its SNR."""
        root, clean, noises = wav_corpus
        manifest = build_manifest(clean, noises, "test", 6, 0, corpus_root=root)
        for entry in manifest:
            result = synthesize(entry, manifest.corpus_root)
            clean_part = result.noisy.samples - result.scaled_noise.samples
            measured = measured_snr_db(AudioSignal(clean_part), result.scaled_noise)
            assert measured == pytest.approx(entry.snr_db, abs=0.01)

    def test_resolve(self, tmp_path):
        """Relative paths are joined to the corpus root."""
        assert resolve("a/b.wav", tmp_path) == tmp_path / "a" / "b.wav"
        assert resolve("/abs/x.wav", tmp_path).as_posix() == "/abs/x.wav"
        assert resolve("a.wav", None).as_posix() == "a.wav"
