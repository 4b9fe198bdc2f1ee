from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tmfwc_bench.dsp.counters import record_macs
from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.signal_io import AudioBuffer, FramingConfig, apply_window, frame_signal
from tmfwc_bench.errors import (
    InvalidScale,
    SampleRateMismatch,
    SignalTooShort,
    TooManyLevels,
)

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
CASCADE_ITERATIONS = 10


class WaveletFamily(StrEnum):
    HAAR = "haar"
    DAUBECHIES4 = "daubechies4"


class Boundary(StrEnum):
    PERIODIZATION = "periodization"
    SYMMETRIC = "symmetric"


class WaveletSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: WaveletFamily = WaveletFamily.HAAR
    levels: int = Field(default=1, ge=1)
    boundary: Boundary = Boundary.PERIODIZATION


@dataclass(frozen=True)
class WaveletDecomposition:
    approximation: np.ndarray
    details: tuple[np.ndarray, ...]  # level 1 (finest) first

    @property
    def levels(self) -> int:
        return len(self.details)


@lru_cache(maxsize=4)
def _filters(family: WaveletFamily) -> tuple[np.ndarray, np.ndarray]:
    if family is WaveletFamily.HAAR:
        h = np.array([1.0, 1.0]) / _SQRT2
    else:
        h = np.array([1 + _SQRT3, 3 + _SQRT3, 3 - _SQRT3, 1 - _SQRT3]) / (4 * _SQRT2)
    # quadrature mirror: g(k) = (-1)^k h(L-1-k)
    g = np.array([(-1) ** k * h[len(h) - 1 - k] for k in range(len(h))])
    h.setflags(write=False)
    g.setflags(write=False)
    return h, g


def filters(spec: WaveletSpec) -> tuple[np.ndarray, np.ndarray]:
    """(low-pass h, high-pass g) decomposition filters."""
    return _filters(WaveletFamily(spec.family))


def _min_level_len(spec: WaveletSpec) -> int:
    # periodization wraps any even length; symmetric extension reflects once
    if Boundary(spec.boundary) is Boundary.PERIODIZATION:
        return 1
    return len(filters(spec)[0])


def _extended_indices(n: int, taps: int, boundary: Boundary) -> np.ndarray:
    idx = 2 * np.arange(n // 2).reshape(-1, 1) + np.arange(taps).reshape(1, -1)
    if boundary is Boundary.PERIODIZATION:
        return idx % n
    # half-sample symmetric: x[n], x[n+1], ... -> x[n-1], x[n-2], ...
    return np.where(idx < n, idx, 2 * n - 1 - idx)


def dwt_single_level(x: np.ndarray, spec: WaveletSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    One analysis step along the last axis: a[k] = sum_j h[j] x[2k+j], same for d with g.

    Odd lengths are first extended by one symmetric sample, so each output holds
    ceil(n/2) coefficients.
    """
    x = np.asarray(x, dtype=np.float64)
    h, g = filters(spec)
    n = x.shape[-1]
    min_len = _min_level_len(spec)
    if n < min_len:
        raise SignalTooShort(
            f"{spec.family.value} needs at least {min_len} samples per level, got {n}"
        )
    if n % 2:
        x = np.concatenate([x, x[..., -1:]], axis=-1)
        n += 1
    windows = x[..., _extended_indices(n, len(h), Boundary(spec.boundary))]
    rows = 1 if x.ndim == 1 else int(np.prod(x.shape[:-1]))
    record_macs(rows * 2 * len(h) * (n // 2))
    return windows @ h, windows @ g


def max_levels(n: int) -> int:
    return int(math.floor(math.log2(n))) if n >= 1 else 0


def level_cap(n: int, spec: WaveletSpec) -> int:
    """Deepest decomposition of an n-sample signal that every level can filter."""
    cap = max_levels(n)
    min_len = _min_level_len(spec)
    levels = 0
    while levels < cap and n >= min_len:
        n = -(-n // 2)
        levels += 1
    return levels


def dwt_multilevel(x: np.ndarray, spec: WaveletSpec) -> WaveletDecomposition:
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    cap = level_cap(n, spec)
    if spec.levels > cap:
        raise TooManyLevels(
            f"{spec.levels} {spec.family.value} levels requested for {n} samples (max {cap})"
        )
    details: list[np.ndarray] = []
    approx = x
    for _ in range(spec.levels):
        approx, d = dwt_single_level(approx, spec)
        details.append(d)
    return WaveletDecomposition(approximation=approx, details=tuple(details))


def decomposition_to_matrix(dec: WaveletDecomposition) -> FeatureMatrix:
    """One row per level (finest detail first, approximation last), zero-padded."""
    rows = [*dec.details, dec.approximation]
    width = max(r.shape[-1] for r in rows)
    values = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        values[i, : r.shape[-1]] = r
    return FeatureMatrix(values=values, column_names=tuple(f"k{i}" for i in range(width)))


@lru_cache(maxsize=4)
def _cascade(family: WaveletFamily, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample psi on the dyadic grid of [0, L-1] by the cascade algorithm."""
    h, g = _filters(family)
    c, d = _SQRT2 * h, _SQRT2 * g
    taps = len(c)
    res = 2**iterations

    # phi at the integers: eigenvector of M[i, j] = c[2i - j] for eigenvalue 1
    m = np.zeros((taps, taps))
    for i in range(taps):
        for j in range(taps):
            if 0 <= 2 * i - j < taps:
                m[i, j] = c[2 * i - j]
    vals, vecs = np.linalg.eig(m)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    v = v / v.sum()

    size = (taps - 1) * res + 1
    phi = np.zeros(size)
    phi[::res] = v
    for level in range(1, iterations + 1):
        step = res >> level
        for i in range(step, size, 2 * step):
            acc = 0.0
            for k in range(taps):
                j = 2 * i - k * res
                if 0 <= j < size:
                    acc += c[k] * phi[j]
            phi[i] = acc

    psi = np.zeros(size)
    for i in range(size):
        acc = 0.0
        for k in range(taps):
            j = 2 * i - k * res
            if 0 <= j < size:
                acc += d[k] * phi[j]
        psi[i] = acc
    t = np.arange(size) / res
    return t, psi


def mother_wavelet(spec: WaveletSpec, t: np.ndarray) -> np.ndarray:
    """Continuous mother wavelet psi(t) of the family (support [0, L-1])."""
    t = np.asarray(t, dtype=np.float64)
    family = WaveletFamily(spec.family)
    if family is WaveletFamily.HAAR:
        return np.where((t >= 0) & (t < 0.5), 1.0, np.where((t >= 0.5) & (t < 1.0), -1.0, 0.0))
    grid, psi = _cascade(family, CASCADE_ITERATIONS)
    return np.interp(t, grid, psi, left=0.0, right=0.0)


def cwt_coefficient(
    x: AudioBuffer,
    a: float,
    b: float,
    spec: WaveletSpec,
) -> float:
    """X(a, b) = (1/sqrt(a)) * sum_n x(t_n) psi((t_n - b)/a) dt, t_n = n/fs."""
    if a <= 0:
        raise InvalidScale(f"Wavelet scale must be > 0, got {a}")
    dt = 1.0 / x.sample_rate_hz
    t = np.arange(len(x)) * dt
    psi = mother_wavelet(spec, (t - b) / a)
    return float(np.dot(x.samples, psi) * dt / math.sqrt(a))


class DwtConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: WaveletFamily = WaveletFamily.DAUBECHIES4
    levels: int = Field(default=4, ge=1)
    boundary: Boundary = Boundary.PERIODIZATION
    floor_eps: float = Field(default=1e-10, gt=0.0)

    def wavelet_spec(self) -> WaveletSpec:
        return WaveletSpec(family=self.family, levels=self.levels, boundary=self.boundary)


def dwt_column_names(levels: int) -> tuple[str, ...]:
    return tuple(f"e_d{i}" for i in range(1, levels + 1)) + (f"e_a{levels}",)


def dwt_features(
    buf: AudioBuffer,
    cfg: DwtConfig,
    framing: FramingConfig | None = None,
    sample_rate_hz: int | None = None,
) -> FeatureMatrix:
    """Per-frame log10 sub-band energies of a multi-level decomposition."""
    framing = framing or FramingConfig()
    if sample_rate_hz is not None and buf.sample_rate_hz != sample_rate_hz:
        raise SampleRateMismatch(
            f"Audio is {buf.sample_rate_hz} Hz, pipeline expects {sample_rate_hz} Hz"
        )
    frames = apply_window(frame_signal(buf, framing.frame_ms, framing.hop_ms), framing.window)
    dec = dwt_multilevel(frames.frames, cfg.wavelet_spec())
    bands = [*dec.details, dec.approximation]
    energies = np.stack([np.sum(b**2, axis=-1) for b in bands], axis=-1)
    return FeatureMatrix(
        values=np.log10(np.maximum(energies, cfg.floor_eps)),
        column_names=dwt_column_names(cfg.levels),
        step_hz=buf.sample_rate_hz / frames.hop_len,
    )
