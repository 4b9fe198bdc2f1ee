from __future__ import annotations

import numpy as np
import pytest
from scipy.io import wavfile

from tmfwc_bench.dsp.signal_io import (
    AudioBuffer,
    FramingConfig,
    WindowKind,
    apply_window,
    frame_count,
    frame_signal,
    load_wav,
    window_coefficients,
)
from tmfwc_bench.errors import (
    EmptyAudio,
    InvalidFraming,
    IoFailure,
    MalformedContainer,
    UnsupportedEncoding,
)


def test_load_wav_scales_pcm16(tmp_path):
    path = tmp_path / "pcm16.wav"
    wavfile.write(path, 8000, np.array([0, 16384, -16384], dtype=np.int16))
    buf = load_wav(path)
    assert buf.sample_rate_hz == 8000
    np.testing.assert_array_equal(buf.samples, [0.0, 0.5, -0.5])


def test_load_wav_averages_stereo(tmp_path):
    path = tmp_path / "stereo.wav"
    frames = np.tile(np.array([[0.4, 0.8]], dtype=np.float32), (5, 1))
    wavfile.write(path, 8000, frames)
    buf = load_wav(path)
    np.testing.assert_allclose(buf.samples, 0.6, atol=1e-7)


def test_load_wav_keeps_length_and_rate(tmp_path):
    path = tmp_path / "one_second.wav"
    wavfile.write(path, 8000, np.zeros(8000, dtype=np.int16))
    buf = load_wav(path)
    assert len(buf) == 8000
    assert buf.sample_rate_hz == 8000


def test_load_wav_clips_float32(tmp_path):
    path = tmp_path / "loud.wav"
    wavfile.write(path, 8000, np.array([1.5, -2.0, 0.25], dtype=np.float32))
    np.testing.assert_array_equal(load_wav(path).samples, [1.0, -1.0, 0.25])


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_load_wav_rejects_non_finite_float32(tmp_path, bad):
    path = tmp_path / "broken.wav"
    wavfile.write(path, 8000, np.array([0.1, bad, 0.2], dtype=np.float32))
    with pytest.raises(MalformedContainer, match="NaN or infinity"):
        load_wav(path)


def test_load_wav_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_wav(tmp_path / "nope.wav")


def test_load_wav_rejects_non_riff(tmp_path):
    path = tmp_path / "fake.wav"
    path.write_bytes(b"OggS" + b"\x00" * 64)
    with pytest.raises(MalformedContainer):
        load_wav(path)


def test_load_wav_rejects_8bit(tmp_path):
    path = tmp_path / "u8.wav"
    wavfile.write(path, 8000, np.array([128, 200, 50], dtype=np.uint8))
    with pytest.raises(UnsupportedEncoding):
        load_wav(path)


def test_load_wav_rejects_empty(tmp_path):
    path = tmp_path / "empty.wav"
    wavfile.write(path, 8000, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyAudio):
        load_wav(path)


def test_audio_buffer_rejects_out_of_range():
    with pytest.raises(ValueError):
        AudioBuffer(samples=np.array([0.0, 1.5]), sample_rate_hz=8000)


def test_frame_lengths_at_8khz(make_buffer):
    fs = frame_signal(make_buffer(np.zeros(800)), 20.0, 10.0)
    assert (fs.frame_len, fs.hop_len) == (160, 80)


def test_exact_frame_length_gives_one_frame(make_buffer):
    x = np.linspace(-0.5, 0.5, 160)
    fs = frame_signal(make_buffer(x), 20.0, 10.0)
    assert fs.n_frames == 1
    np.testing.assert_array_equal(fs.frames[0], x)


def test_frame_count_for_400_samples(make_buffer):
    x = np.random.default_rng(0).uniform(-1, 1, 400)
    fs = frame_signal(make_buffer(x), 20.0, 10.0)
    assert fs.n_frames == 4
    for i, start in enumerate((0, 80, 160, 240)):
        np.testing.assert_array_equal(fs.frames[i], x[start : start + 160])


def test_short_signal_is_zero_padded(make_buffer):
    fs = frame_signal(make_buffer(np.full(100, 0.25)), 20.0, 10.0)
    assert fs.n_frames == 1
    np.testing.assert_array_equal(fs.frames[0, :100], 0.25)
    np.testing.assert_array_equal(fs.frames[0, 100:], 0.0)


def test_frame_count_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        frame = int(rng.integers(1, 64))
        hop = int(rng.integers(1, frame + 1))
        n = int(rng.integers(1, 400))
        starts = [s for s in range(0, max(n, 1), hop)]
        # smallest set of offsets whose frames cover every sample
        expected = 1 if n <= frame else next(i + 1 for i, s in enumerate(starts) if s + frame >= n)
        assert frame_count(n, frame, hop) == expected


def test_hop_equal_frame_round_trips(make_buffer):
    x = np.random.default_rng(1).uniform(-1, 1, 1000)
    fs = frame_signal(make_buffer(x), 10.0, 10.0)
    joined = fs.frames.reshape(-1)
    np.testing.assert_array_equal(joined[: x.size], x)
    np.testing.assert_array_equal(joined[x.size :], 0.0)


@pytest.mark.parametrize(("frame_ms", "hop_ms"), [(10.0, 20.0), (0.0, 0.0), (20.0, -1.0)])
def test_invalid_framing(make_buffer, frame_ms, hop_ms):
    with pytest.raises(InvalidFraming):
        frame_signal(make_buffer(np.zeros(400)), frame_ms, hop_ms)


def test_framing_config_rejects_hop_over_frame():
    with pytest.raises(ValueError):
        FramingConfig(frame_ms=10.0, hop_ms=20.0)


def test_rectangular_window_is_identity(make_buffer):
    fs = frame_signal(make_buffer(np.random.default_rng(2).uniform(-1, 1, 400)), 20.0, 10.0)
    np.testing.assert_array_equal(apply_window(fs, WindowKind.RECTANGULAR).frames, fs.frames)


def test_window_coefficients():
    assert window_coefficients(WindowKind.HAMMING, 21)[0] == pytest.approx(0.08)
    assert window_coefficients(WindowKind.HANNING, 21)[10] == pytest.approx(1.0)


@pytest.mark.parametrize("kind", [WindowKind.HAMMING, WindowKind.HANNING])
@pytest.mark.parametrize("length", [2, 3, 160, 257])
def test_windows_are_symmetric(kind, length):
    w = window_coefficients(kind, length)
    n = np.arange(length)
    expected = (
        0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))
        if kind is WindowKind.HAMMING
        else 0.5 * (1 - np.cos(2 * np.pi * n / (length - 1)))
    )
    np.testing.assert_allclose(w, expected, atol=1e-12)
    np.testing.assert_allclose(w, w[::-1], atol=1e-12)


def test_tapered_window_needs_two_samples(make_buffer):
    fs = frame_signal(make_buffer(np.zeros(4), sample_rate_hz=1000), 1.0, 1.0)
    with pytest.raises(InvalidFraming):
        apply_window(fs, WindowKind.HAMMING)
