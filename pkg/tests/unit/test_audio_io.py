"""Tests for WAV reading and writing."""

import numpy as np
import pytest
import soundfile as sf

from denoise import AudioSignal, read_wav, wav_length, write_wav
from denoise.audio_io import quantize
from denoise.errors import CorruptFile, IoFailure, UnsupportedFormat


class TestQuantize:
    """Tests for the 16-bit conversion."""

    def test_half_scale(self):
        """0.5 maps to 16384."""
        assert quantize(np.array([0.5]))[0] == 16384

    def test_overshoot_saturates(self):
        """Values above full scale saturate instead of wrapping."""
        out = quantize(np.array([1.5, 1.0, -1.0, -3.0]))
        assert out.tolist() == [32767, 32767, -32768, -32768]

    def test_dtype(self):
        """Output is int16."""
        assert quantize(np.zeros(3)).dtype == np.int16


class TestRoundTrip:
    """Tests for write_wav followed by read_wav."""

    def test_round_trip_within_one_lsb(self, tmp_path, rng):
        """Reading back a written signal loses at most one quantization step."""
        signal = AudioSignal(rng.uniform(-0.9, 0.9, 4000))
        path = tmp_path / "x.wav"
        write_wav(signal, path)
        back = read_wav(path)
        assert len(back) == len(signal)
        assert back.sample_rate_hz == 16000
        assert np.max(np.abs(back.samples - signal.samples)) <= 1.0 / 32768

    def test_write_creates_parent_directories(self, tmp_path, tone):
        """Missing parent directories are created."""
        path = tmp_path / "a" / "b" / "tone.wav"
        write_wav(tone, path)
        assert path.is_file()

    def test_clipped_on_disk(self, tmp_path):
        """Overshooting samples are clipped when written."""
        path = tmp_path / "loud.wav"
        write_wav(AudioSignal(np.array([2.0, -2.0, 0.0])), path)
        back = read_wav(path)
        assert back.samples[0] == pytest.approx(32767 / 32768)
        assert back.samples[1] == -1.0

    def test_float_wav_accepted(self, tmp_path):
        """32-bit float files are read without scaling."""
        path = tmp_path / "float.wav"
        data = np.array([0.25, -0.5, 0.75], dtype=np.float32)
        sf.write(str(path), data, 16000, subtype="FLOAT")
        back = read_wav(path)
        assert np.allclose(back.samples, data)

    def test_wav_length(self, tmp_path, tone):
        """wav_length reads the frame count from the header."""
        path = tmp_path / "tone.wav"
        write_wav(tone, path)
        assert wav_length(path) == len(tone)


class TestReadErrors:
    """Tests for rejected inputs."""

    def test_missing_file(self, tmp_path):
        """A missing file raises IoFailure."""
        with pytest.raises(IoFailure):
            read_wav(tmp_path / "nope.wav")

    def test_wrong_rate(self, tmp_path):
        """Files at other sample rates are rejected."""
        path = tmp_path / "8k.wav"
        sf.write(str(path), np.zeros(800), 8000, subtype="PCM_16")
        with pytest.raises(UnsupportedFormat, match="16000 Hz"):
            read_wav(path)

    def test_stereo(self, tmp_path):
        """Multichannel files are rejected."""
        path = tmp_path / "stereo.wav"
        sf.write(str(path), np.zeros((800, 2)), 16000, subtype="PCM_16")
        with pytest.raises(UnsupportedFormat, match="mono"):
            read_wav(path)

    def test_wrong_encoding(self, tmp_path):
        """24-bit PCM is not a supported encoding."""
        path = tmp_path / "24bit.wav"
        sf.write(str(path), np.zeros(800), 16000, subtype="PCM_24")
        with pytest.raises(UnsupportedFormat):
            read_wav(path)

    def test_garbage(self, tmp_path):
        """Bytes that are not a WAV container raise CorruptFile."""
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not a riff file at all")
        with pytest.raises(CorruptFile):
            read_wav(path)

    def test_write_to_directory_fails(self, tmp_path, tone):
        """Writing onto a directory raises IoFailure."""
        target = tmp_path / "dir.wav"
        target.mkdir()
        with pytest.raises(IoFailure):
            write_wav(tone, target)
