from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tmfwc_bench.dsp.counters import record_macs, record_transforms
from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.signal_io import (
    AudioBuffer,
    FramingConfig,
    apply_window,
    frame_signal,
)
from tmfwc_bench.errors import (
    ConfigInvalid,
    DegenerateFilter,
    DimensionMismatch,
    EmptyTrajectory,
    InvalidFraming,
    NegativeFrequency,
    SampleRateMismatch,
)

DEFAULT_FLOOR_EPS = 1e-10


class FilterShape(StrEnum):
    TRIANGULAR = "triangular"
    COSINE = "cosine"


class MelFilterbankSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_filters: int = Field(default=25, ge=2)
    f_min_hz: float = Field(default=0.0, ge=0.0)
    f_max_hz: float = 4000.0
    fft_size: int = 1024
    sample_rate_hz: int = Field(default=8000, gt=0)
    shape: FilterShape = FilterShape.TRIANGULAR

    @model_validator(mode="after")
    def _check_band(self) -> MelFilterbankSpec:
        if not self.f_min_hz < self.f_max_hz <= self.sample_rate_hz / 2:
            raise ValueError(
                f"need 0 <= f_min_hz < f_max_hz <= sample_rate_hz/2 "
                f"(got {self.f_min_hz}, {self.f_max_hz}, fs={self.sample_rate_hz})"
            )
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        return self


class MfccConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_ceps: int = Field(default=13, ge=1)
    include_c0: bool = False
    delta_width: int = Field(default=2, ge=1)
    use_deltas: bool = False
    floor_eps: float = Field(default=DEFAULT_FLOOR_EPS, gt=0.0)
    # -0.5 is the printed cepstrum phase; +0.5 is the DCT-II convention
    dct_phase: float = -0.5


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # (M, fft_size/2 + 1)
    center_freqs_hz: np.ndarray
    edges_hz: np.ndarray  # M + 2 unquantized edges
    edge_bins: np.ndarray  # M + 2 FFT bins

    @property
    def num_filters(self) -> int:
        return int(self.weights.shape[0])


def hz_to_mel(f: float | np.ndarray) -> float | np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if np.any(arr < 0):
        raise NegativeFrequency(f"Frequency must be >= 0 Hz, got {f}")
    out = 2595.0 * np.log10(1.0 + arr / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m: float | np.ndarray) -> float | np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if np.any(arr < 0):
        raise NegativeFrequency(f"Mel value must be >= 0, got {m}")
    out = 700.0 * (10.0 ** (arr / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def mel_edges_hz(spec: MelFilterbankSpec) -> np.ndarray:
    """M + 2 edge frequencies, uniform in mel between f_min and f_max."""
    mels = np.linspace(hz_to_mel(spec.f_min_hz), hz_to_mel(spec.f_max_hz), spec.num_filters + 2)
    return np.asarray(mel_to_hz(mels))


def filter_response(
    x: np.ndarray,
    left: float,
    center: float,
    right: float,
    shape: FilterShape | str = FilterShape.TRIANGULAR,
) -> np.ndarray:
    """Unit-peak response of one mel filter at positions x (Hz or FFT bins)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    rise = (x >= left) & (x < center)
    fall = (x >= center) & (x <= right)
    if FilterShape(shape) is FilterShape.TRIANGULAR:
        out[rise] = (x[rise] - left) / (center - left)
        out[fall] = (right - x[fall]) / (right - center)
    else:
        out[rise] = 0.5 * (1.0 - np.cos(np.pi * (x[rise] - left) / (center - left)))
        out[fall] = 0.5 * (1.0 + np.cos(np.pi * (x[fall] - center) / (right - center)))
    return out


@lru_cache(maxsize=32)
def build_mel_filterbank(spec: MelFilterbankSpec) -> MelFilterbank:
    edges_hz = mel_edges_hz(spec)
    bins = np.floor((spec.fft_size + 1) * edges_hz / spec.sample_rate_hz).astype(np.int64)
    if np.any(np.diff(bins) <= 0):
        raise DegenerateFilter(
            f"{spec.num_filters} filters over {spec.f_min_hz}-{spec.f_max_hz} Hz collapse onto "
            f"shared FFT bins at fft_size={spec.fft_size}; raise fft_size or lower num_filters."
        )

    k = np.arange(spec.fft_size // 2 + 1, dtype=np.float64)
    weights = np.vstack(
        [
            filter_response(k, bins[i], bins[i + 1], bins[i + 2], spec.shape)
            for i in range(spec.num_filters)
        ]
    )
    weights.setflags(write=False)
    return MelFilterbank(
        weights=weights,
        center_freqs_hz=edges_hz[1:-1].copy(),
        edges_hz=edges_hz,
        edge_bins=bins,
    )


def _zero_pad(frame: np.ndarray, fft_size: int) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] == 0:
        raise InvalidFraming("Cannot transform an empty frame.")
    if frame.shape[-1] > fft_size:
        raise InvalidFraming(f"Frame length {frame.shape[-1]} exceeds fft_size {fft_size}")
    pad = [(0, 0)] * (frame.ndim - 1) + [(0, fft_size - frame.shape[-1])]
    return np.pad(frame, pad)


def _dft_matrix(n: int, rows: int | None = None) -> np.ndarray:
    k = np.arange(n if rows is None else rows).reshape(-1, 1)
    idx = np.arange(n).reshape(1, -1)
    return np.exp(-2j * np.pi * k * idx / n)


def dft(frame: np.ndarray, fft_size: int, method: str = "fft") -> np.ndarray:
    """Full complex spectrum X(k), k = 0..fft_size-1."""
    x = _zero_pad(frame, fft_size)
    record_transforms(1)
    if method == "direct":
        return _dft_matrix(fft_size) @ x
    return np.fft.fft(x)


def dft_power_spectrum(frame: np.ndarray, fft_size: int, method: str = "fft") -> np.ndarray:
    """|X(k)|^2 for k = 0..fft_size/2."""
    x = _zero_pad(frame, fft_size)
    record_transforms(1)
    if method == "direct":
        spec = _dft_matrix(fft_size, fft_size // 2 + 1) @ x
    elif method == "fft":
        spec = np.fft.rfft(x)
    else:
        raise ConfigInvalid(f"Unknown DFT method: {method!r}")
    return np.abs(spec) ** 2


def power_spectra(frames: np.ndarray, fft_size: int) -> np.ndarray:
    """Row-wise power spectra; one transform per frame."""
    x = _zero_pad(frames, fft_size)
    n_frames = x.shape[0]
    record_transforms(n_frames)
    record_macs(n_frames * 2 * fft_size * int(math.log2(fft_size)))
    return np.abs(np.fft.rfft(x, axis=-1)) ** 2


def apply_filterbank(power: np.ndarray, fb: MelFilterbank) -> np.ndarray:
    power = np.asarray(power, dtype=np.float64)
    if power.shape[-1] != fb.weights.shape[1]:
        raise DimensionMismatch(
            f"Spectrum has {power.shape[-1]} bins, filterbank expects {fb.weights.shape[1]}"
        )
    rows = 1 if power.ndim == 1 else power.shape[0]
    record_macs(rows * fb.weights.size)
    return power @ fb.weights.T


def _cepstral_basis(num_filters: int, ns: np.ndarray, phase: float) -> np.ndarray:
    m = np.arange(num_filters, dtype=np.float64)
    return np.cos(np.pi * ns.reshape(-1, 1) * (m.reshape(1, -1) + phase) / num_filters)


def dct_cepstrum(
    s: np.ndarray,
    num_ceps: int,
    floor_eps: float = DEFAULT_FLOOR_EPS,
    *,
    include_c0: bool = True,
    phase: float = -0.5,
) -> np.ndarray:
    """
    c(n) = sum_m log10(max(s(m), eps)) * cos(pi*n*(m + phase)/M).

    With include_c0 the result holds n = 0..C-1, otherwise n = 1..C.
    Accepts one vector of mel energies or a (frames, M) matrix.
    """
    s = np.asarray(s, dtype=np.float64)
    num_filters = s.shape[-1]
    if num_ceps < 1 or num_ceps > num_filters:
        raise ConfigInvalid(f"num_ceps must be in [1, {num_filters}], got {num_ceps}")
    if np.any(s < 0):
        raise ValueError("Mel energies must be non-negative.")
    ns = np.arange(num_ceps) if include_c0 else np.arange(1, num_ceps + 1)
    log_s = np.log10(np.maximum(s, floor_eps))
    rows = 1 if s.ndim == 1 else s.shape[0]
    record_macs(rows * num_filters * num_ceps)
    return log_s @ _cepstral_basis(num_filters, ns, phase).T


def delta(traj: np.ndarray, n_width: int = 2) -> np.ndarray:
    """Regression deltas over +-n_width frames; boundary frames are replicated."""
    traj = np.asarray(traj, dtype=np.float64)
    if traj.shape[0] == 0:
        raise EmptyTrajectory("Cannot take deltas of an empty trajectory.")
    if n_width < 1:
        raise ConfigInvalid(f"delta width must be >= 1, got {n_width}")
    pad = [(n_width, n_width)] + [(0, 0)] * (traj.ndim - 1)
    padded = np.pad(traj, pad, mode="edge")
    t = traj.shape[0]
    num = np.zeros_like(traj)
    for n in range(1, n_width + 1):
        num += n * (padded[n_width + n : n_width + n + t] - padded[n_width - n : n_width - n + t])
    return num / (2.0 * sum(n * n for n in range(1, n_width + 1)))


def delta_delta(traj: np.ndarray, n_width: int = 2) -> np.ndarray:
    return delta(delta(traj, n_width), n_width)


def cepstral_column_names(cfg: MfccConfig) -> tuple[str, ...]:
    ns = range(cfg.num_ceps) if cfg.include_c0 else range(1, cfg.num_ceps + 1)
    names = [f"c{n}" for n in ns]
    if cfg.use_deltas:
        names += [f"d{n}" for n in ns] + [f"dd{n}" for n in ns]
    return tuple(names)


def mfcc_pipeline(
    buf: AudioBuffer,
    spec: MelFilterbankSpec,
    cfg: MfccConfig,
    framing: FramingConfig | None = None,
) -> FeatureMatrix:
    """Frame, window, DFT, mel filterbank, log + cosine transform, optional deltas."""
    framing = framing or FramingConfig()
    if buf.sample_rate_hz != spec.sample_rate_hz:
        raise SampleRateMismatch(
            f"Audio is {buf.sample_rate_hz} Hz, filterbank expects {spec.sample_rate_hz} Hz"
        )
    if cfg.num_ceps > spec.num_filters:
        raise ConfigInvalid(
            f"num_ceps={cfg.num_ceps} exceeds num_filters={spec.num_filters}"
        )

    frames = frame_signal(buf, framing.frame_ms, framing.hop_ms)
    if frames.frame_len > spec.fft_size:
        raise InvalidFraming(
            f"frame_len={frames.frame_len} exceeds fft_size={spec.fft_size}"
        )
    windowed = apply_window(frames, framing.window)
    record_macs(windowed.frames.size)

    fb = build_mel_filterbank(spec)
    energies = apply_filterbank(power_spectra(windowed.frames, spec.fft_size), fb)
    ceps = dct_cepstrum(
        energies,
        cfg.num_ceps,
        cfg.floor_eps,
        include_c0=cfg.include_c0,
        phase=cfg.dct_phase,
    )
    if cfg.use_deltas:
        d = delta(ceps, cfg.delta_width)
        ceps = np.hstack([ceps, d, delta(d, cfg.delta_width)])

    return FeatureMatrix(
        values=ceps,
        column_names=cepstral_column_names(cfg),
        step_hz=buf.sample_rate_hz / frames.hop_len,
    )
