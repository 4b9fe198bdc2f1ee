from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.io import wavfile

from tmfwc_bench.errors import (
    EmptyAudio,
    InvalidFraming,
    IoFailure,
    MalformedContainer,
    UnsupportedEncoding,
)

PCM16_SCALE = 2.0**15


class WindowKind(StrEnum):
    RECTANGULAR = "rectangular"
    HAMMING = "hamming"
    HANNING = "hanning"


class FramingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    frame_ms: float = Field(default=20.0, gt=0.0)
    hop_ms: float = Field(default=10.0, gt=0.0)
    window: WindowKind = WindowKind.HAMMING

    @model_validator(mode="after")
    def _check_hop(self) -> FramingConfig:
        if self.hop_ms > self.frame_ms:
            raise ValueError(f"hop_ms ({self.hop_ms}) must not exceed frame_ms ({self.frame_ms})")
        return self


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AudioBuffer:
    """Mono samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"AudioBuffer expects 1-D samples, got shape {samples.shape}")
        if samples.size == 0:
            raise EmptyAudio("AudioBuffer has zero samples.")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)) or np.max(np.abs(samples)) > 1.0:
            raise ValueError("AudioBuffer samples must be finite and within [-1, 1].")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, frame_len)
    frame_len: int
    hop_len: int
    window_kind: WindowKind = WindowKind.RECTANGULAR

    def __post_init__(self) -> None:
        if not 0 < self.hop_len <= self.frame_len:
            raise InvalidFraming(
                f"hop_len must satisfy 0 < hop_len <= frame_len "
                f"(hop_len={self.hop_len}, frame_len={self.frame_len})"
            )
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.frame_len:
            raise InvalidFraming(
                f"frames must be (n, {self.frame_len}), got shape {frames.shape}"
            )
        object.__setattr__(self, "frames", _frozen(frames))

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


def _check_riff_header(path: Path) -> None:
    with path.open("rb") as fh:
        head = fh.read(12)
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise MalformedContainer(f"Not a RIFF/WAVE file: {path}")


def load_wav(path: str | Path) -> AudioBuffer:
    """
    Read a RIFF/WAVE file (PCM16LE or IEEE float32, mono or stereo).

    Stereo is averaged to mono. PCM16 is scaled by 2^15; float32 is clipped to [-1, 1].
    No resampling is done.
    """
    path = Path(path)
    if not path.is_file():
        raise IoFailure(f"WAV file not found: {path}")
    try:
        _check_riff_header(path)
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e

    try:
        rate, data = wavfile.read(path)
    except ValueError as e:
        # scipy reports unknown codecs (ADPCM, mu-law, ...) as ValueError
        raise UnsupportedEncoding(f"{path}: {e}") from e
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        if not np.all(np.isfinite(data)):
            raise MalformedContainer(f"{path}: float samples contain NaN or infinity")
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedEncoding(
            f"{path}: sample type {data.dtype} is not supported (PCM16 or float32 only)"
        )

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise EmptyAudio(f"{path}: zero samples")
    return AudioBuffer(samples=samples, sample_rate_hz=int(rate))


def write_wav(buf: AudioBuffer, path: str | Path, encoding: str = "pcm16") -> Path:
    path = Path(path)
    if encoding == "pcm16":
        data = np.clip(np.round(buf.samples * PCM16_SCALE), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = buf.samples.astype(np.float32)
    else:
        raise UnsupportedEncoding(f"Unknown WAV encoding: {encoding!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        wavfile.write(path, buf.sample_rate_hz, data)
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def ms_to_samples(ms: float, sample_rate_hz: int) -> int:
    return int(round(ms * sample_rate_hz / 1000.0))


def frame_count(n_samples: int, frame_len: int, hop_len: int) -> int:
    if n_samples <= frame_len:
        return 1
    return math.ceil((n_samples - frame_len) / hop_len) + 1


def frame_signal(buf: AudioBuffer, frame_ms: float, hop_ms: float) -> FrameSequence:
    """Split into frames starting at i*hop_len; the final partial frame is zero-padded."""
    if frame_ms <= 0 or hop_ms <= 0 or hop_ms > frame_ms:
        raise InvalidFraming(
            f"Need frame_ms >= hop_ms > 0 (frame_ms={frame_ms}, hop_ms={hop_ms})"
        )
    frame_len = ms_to_samples(frame_ms, buf.sample_rate_hz)
    hop_len = ms_to_samples(hop_ms, buf.sample_rate_hz)
    if frame_len < 1 or hop_len < 1:
        raise InvalidFraming(
            f"{frame_ms} ms / {hop_ms} ms is shorter than one sample at {buf.sample_rate_hz} Hz"
        )

    n = frame_count(len(buf), frame_len, hop_len)
    padded_len = (n - 1) * hop_len + frame_len
    padded = np.zeros(padded_len, dtype=np.float64)
    padded[: min(len(buf), padded_len)] = buf.samples[:padded_len]
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_len)[::hop_len]
    return FrameSequence(frames=frames, frame_len=frame_len, hop_len=hop_len)


def window_coefficients(kind: WindowKind | str, length: int) -> np.ndarray:
    kind = WindowKind(kind)
    if kind is WindowKind.RECTANGULAR:
        return np.ones(length)
    if length < 2:
        raise InvalidFraming(f"{kind.value} window needs frame_len >= 2, got {length}")
    if kind is WindowKind.HAMMING:
        return np.hamming(length)
    return np.hanning(length)


def apply_window(fs: FrameSequence, kind: WindowKind | str) -> FrameSequence:
    kind = WindowKind(kind)
    w = window_coefficients(kind, fs.frame_len)
    return FrameSequence(
        frames=fs.frames * w, frame_len=fs.frame_len, hop_len=fs.hop_len, window_kind=kind
    )
