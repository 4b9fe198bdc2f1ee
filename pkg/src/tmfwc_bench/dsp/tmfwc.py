"""
Time-domain mel frequency wavelet coefficients.

Each mel channel is represented by a set of (frequency, parameter) components. Superposing
parameter-weighted cosines gives the channel's real kernel and sines its imaginary kernel. The
signal is convolved with both in the time domain, the pointwise magnitude of the pair forms an
envelope, and absolute max-pooling reduces the envelope to the feature rate. No frequency-domain
transform touches the signal on the default path.
"""

from __future__ import annotations

import contextvars
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from importlib import resources
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.signal import fftconvolve

from tmfwc_bench.dsp.counters import record_macs, record_transforms
from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.mfcc import (
    FilterShape,
    MelFilterbankSpec,
    filter_response,
    mel_edges_hz,
)
from tmfwc_bench.dsp.signal_io import AudioBuffer, ms_to_samples
from tmfwc_bench.errors import (
    AliasedComponent,
    ConfigInvalid,
    DimensionMismatch,
    EmptySupport,
    InvalidComponentTable,
    IoFailure,
    SampleRateMismatch,
)

BUILTIN_TABLES = "data"


class Taper(StrEnum):
    NONE = "none"
    HANN = "hann"


class ConvolutionMode(StrEnum):
    DIRECT = "direct"
    FFT = "fft"  # benchmark comparison only


class TmfwcConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_channels: int = Field(default=10, ge=1)
    kernel_ms: float = Field(default=25.0, gt=0.0)
    taper: Taper = Taper.HANN
    pool_window_ms: float = Field(default=8.0, gt=0.0)
    component_spacing_hz: float = Field(default=10.0, gt=0.0)
    f_min_hz: float = Field(default=0.0, ge=0.0)
    f_max_hz: float = 4000.0
    peak_weight: float = Field(default=1.0, gt=0.0)
    # CSV path or shipped table name; channels it holds replace the derived ones
    table: str | None = None

    def filterbank_spec(
        self,
        sample_rate_hz: int,
        fft_size: int = 1024,
        shape: FilterShape = FilterShape.TRIANGULAR,
    ) -> MelFilterbankSpec:
        return MelFilterbankSpec(
            num_filters=max(2, self.num_channels),
            f_min_hz=self.f_min_hz,
            f_max_hz=self.f_max_hz,
            fft_size=fft_size,
            sample_rate_hz=sample_rate_hz,
            shape=shape,
        )


@dataclass(frozen=True)
class ChannelComponents:
    channel: int  # 1-based, as in the published table
    freqs_hz: np.ndarray
    parameters: np.ndarray

    def __post_init__(self) -> None:
        freqs = np.array(self.freqs_hz, dtype=np.float64)
        params = np.array(self.parameters, dtype=np.float64)
        if freqs.ndim != 1 or freqs.shape != params.shape or freqs.size == 0:
            raise InvalidComponentTable(
                f"channel {self.channel}: need matching non-empty freq/parameter lists"
            )
        if np.any(np.diff(freqs) <= 0):
            raise InvalidComponentTable(f"channel {self.channel}: freqs must strictly increase")
        if np.any(params <= 0):
            raise InvalidComponentTable(f"channel {self.channel}: parameters must be > 0")
        steps = np.sign(np.diff(params))
        steps = steps[steps != 0]
        if np.any(np.diff(steps) > 0):
            raise InvalidComponentTable(
                f"channel {self.channel}: parameters must rise then fall"
            )
        freqs.setflags(write=False)
        params.setflags(write=False)
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "parameters", params)

    def __len__(self) -> int:
        return int(self.freqs_hz.size)


@dataclass(frozen=True)
class MelComponentTable:
    channels: tuple[ChannelComponents, ...]

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    def channel(self, index: int) -> ChannelComponents:
        for ch in self.channels:
            if ch.channel == index:
                return ch
        raise KeyError(index)


@dataclass(frozen=True)
class MelWaveKernel:
    channel_index: int
    real_kernel: np.ndarray
    imag_kernel: np.ndarray
    sample_rate_hz: int

    @property
    def kernel_len(self) -> int:
        return int(self.real_kernel.size)

    @property
    def complex_kernel(self) -> np.ndarray:
        return self.real_kernel + 1j * self.imag_kernel


def derive_component_table(
    spec: MelFilterbankSpec,
    spacing_hz: float,
    peak_weight: float = 1.0,
) -> MelComponentTable:
    """
    Sample each channel's continuous-frequency mel filter on a grid anchored at its left edge
    (left + k*spacing, k >= 1, below the right edge). Components with weight > 0 are kept.
    """
    if spacing_hz <= 0:
        raise ConfigInvalid(f"component spacing must be > 0 Hz, got {spacing_hz}")
    edges = mel_edges_hz(spec)
    channels: list[ChannelComponents] = []
    for i in range(spec.num_filters):
        left, center, right = edges[i], edges[i + 1], edges[i + 2]
        k = np.arange(1, int(math.ceil((right - left) / spacing_hz)) + 1)
        freqs = left + k * spacing_hz
        freqs = freqs[freqs < right]
        weights = peak_weight * filter_response(freqs, left, center, right, spec.shape)
        keep = weights > 0
        if not np.any(keep):
            raise EmptySupport(
                f"channel {i + 1}: support {left:.2f}-{right:.2f} Hz is narrower than "
                f"the {spacing_hz} Hz component spacing"
            )
        channels.append(
            ChannelComponents(channel=i + 1, freqs_hz=freqs[keep], parameters=weights[keep])
        )
    return MelComponentTable(channels=tuple(channels))


def resolve_table_path(name: str | Path) -> Path:
    """An existing path wins; otherwise look the file name up among the shipped tables."""
    path = Path(name)
    if path.is_file():
        return path
    builtin = resources.files("tmfwc_bench").joinpath(BUILTIN_TABLES, path.name)
    if builtin.is_file():
        return Path(str(builtin))
    raise IoFailure(f"Component table not found: {name}")


def load_component_table(path: str | Path) -> MelComponentTable:
    """Read a CSV with columns channel, freq_hz, parameter (verbatim, no resampling)."""
    path = resolve_table_path(path)
    by_channel: dict[int, list[tuple[float, float]]] = {}
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"channel", "freq_hz", "parameter"} - set(reader.fieldnames or [])
            if missing:
                raise InvalidComponentTable(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                by_channel.setdefault(int(row["channel"]), []).append(
                    (float(row["freq_hz"]), float(row["parameter"]))
                )
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e
    except ValueError as e:
        if isinstance(e, InvalidComponentTable):
            raise
        raise InvalidComponentTable(f"{path}: {e}") from e
    if not by_channel:
        raise InvalidComponentTable(f"{path}: no components")

    channels = []
    for ch in sorted(by_channel):
        pairs = by_channel[ch]
        channels.append(
            ChannelComponents(
                channel=ch,
                freqs_hz=np.array([f for f, _ in pairs]),
                parameters=np.array([p for _, p in pairs]),
            )
        )
    return MelComponentTable(channels=tuple(channels))


def save_component_table(table: MelComponentTable, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["channel", "freq_hz", "parameter"])
            for ch in table.channels:
                for f, p in zip(ch.freqs_hz, ch.parameters, strict=True):
                    w.writerow([ch.channel, repr(float(f)), repr(float(p))])
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def merge_component_tables(
    override: MelComponentTable, derived: MelComponentTable
) -> MelComponentTable:
    replaced = {ch.channel: ch for ch in derived.channels}
    for ch in override.channels:
        replaced[ch.channel] = ch
    return MelComponentTable(channels=tuple(replaced[k] for k in sorted(replaced)))


def taper_window(kind: Taper | str, length: int) -> np.ndarray:
    if Taper(kind) is Taper.NONE or length < 2:
        return np.ones(length)
    return np.hanning(length)


def kernel_length(cfg: TmfwcConfig, sample_rate_hz: int) -> int:
    return max(1, ms_to_samples(cfg.kernel_ms, sample_rate_hz))


def component_waves(
    entry: ChannelComponents, sample_rate_hz: int, cfg: TmfwcConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Tapered per-component (cosine, sine) waves, each (n_components, kernel_len)."""
    nyquist = sample_rate_hz / 2
    if np.any(entry.freqs_hz >= nyquist):
        raise AliasedComponent(
            f"channel {entry.channel}: component at {entry.freqs_hz.max():.2f} Hz "
            f"is at or above Nyquist ({nyquist} Hz)"
        )
    length = kernel_length(cfg, sample_rate_hz)
    n = np.arange(length, dtype=np.float64)
    phase = 2.0 * np.pi * entry.freqs_hz.reshape(-1, 1) * n.reshape(1, -1) / sample_rate_hz
    scale = entry.parameters.reshape(-1, 1) * taper_window(cfg.taper, length).reshape(1, -1)
    return scale * np.cos(phase), scale * np.sin(phase)


def synthesize_mel_wave(
    entry: ChannelComponents, sample_rate_hz: int, cfg: TmfwcConfig
) -> MelWaveKernel:
    cos_waves, sin_waves = component_waves(entry, sample_rate_hz, cfg)
    real = cos_waves.sum(axis=0)
    imag = sin_waves.sum(axis=0)
    real.setflags(write=False)
    imag.setflags(write=False)
    return MelWaveKernel(
        channel_index=entry.channel,
        real_kernel=real,
        imag_kernel=imag,
        sample_rate_hz=int(sample_rate_hz),
    )


def build_kernel_bank(
    table: MelComponentTable, sample_rate_hz: int, cfg: TmfwcConfig
) -> tuple[MelWaveKernel, ...]:
    return tuple(synthesize_mel_wave(ch, sample_rate_hz, cfg) for ch in table.channels)


def kernel_transfer(kernel: MelWaveKernel, freqs_hz: np.ndarray) -> np.ndarray:
    """H(f) = sum_n h(n) exp(-j 2 pi f n / fs) of the complex kernel h = real + j*imag."""
    freqs = np.asarray(freqs_hz, dtype=np.float64).reshape(-1, 1)
    n = np.arange(kernel.kernel_len).reshape(1, -1)
    basis = np.exp(-2j * np.pi * freqs * n / kernel.sample_rate_hz)
    return basis @ kernel.complex_kernel


def _same(full: np.ndarray, n: int, k: int) -> np.ndarray:
    start = (k - 1) // 2
    return full[start : start + n]


def convolve_channel(
    buf: AudioBuffer,
    kernel: MelWaveKernel,
    mode: ConvolutionMode | str = ConvolutionMode.DIRECT,
) -> tuple[np.ndarray, np.ndarray]:
    """Convolve with the real and imaginary kernels; "same" alignment, kernel centered."""
    if buf.sample_rate_hz != kernel.sample_rate_hz:
        raise SampleRateMismatch(
            f"Audio is {buf.sample_rate_hz} Hz, kernel is {kernel.sample_rate_hz} Hz"
        )
    x = buf.samples
    n, k = x.size, kernel.kernel_len
    if ConvolutionMode(mode) is ConvolutionMode.FFT:
        # two forward transforms and one inverse per part
        record_transforms(6)
        real = fftconvolve(x, kernel.real_kernel, mode="full")
        imag = fftconvolve(x, kernel.imag_kernel, mode="full")
    else:
        record_macs(2 * k * n)
        real = np.convolve(x, kernel.real_kernel, mode="full")
        imag = np.convolve(x, kernel.imag_kernel, mode="full")
    return _same(real, n, k), _same(imag, n, k)


def magnitude_envelope(real_resp: np.ndarray, imag_resp: np.ndarray) -> np.ndarray:
    real_resp = np.asarray(real_resp, dtype=np.float64)
    imag_resp = np.asarray(imag_resp, dtype=np.float64)
    if real_resp.shape != imag_resp.shape:
        raise DimensionMismatch(
            f"real/imag responses differ in shape: {real_resp.shape} vs {imag_resp.shape}"
        )
    return np.hypot(real_resp, imag_resp)


def abs_max_pool(env: np.ndarray, window: int) -> np.ndarray:
    """Non-overlapping windows; keep the element of largest |value|, sign preserved."""
    if window < 1:
        raise ConfigInvalid(f"pool window must be >= 1 sample, got {window}")
    env = np.asarray(env, dtype=np.float64)
    out_len = math.ceil(env.size / window)
    padded = np.zeros(out_len * window)
    padded[: env.size] = env
    blocks = padded.reshape(out_len, window)
    idx = np.argmax(np.abs(blocks), axis=1)
    return blocks[np.arange(out_len), idx]


def pool_window_samples(cfg: TmfwcConfig, sample_rate_hz: int) -> int:
    return max(1, ms_to_samples(cfg.pool_window_ms, sample_rate_hz))


def data_reduction_ratio(signal_len: int, pooled_rows: int) -> float:
    return signal_len / pooled_rows if pooled_rows else 0.0


def resolve_component_table(
    cfg: TmfwcConfig, spec: MelFilterbankSpec
) -> MelComponentTable:
    """Derived table for the filterbank geometry, with any configured table's channels on top."""
    derived = derive_component_table(spec, cfg.component_spacing_hz, cfg.peak_weight)
    if cfg.num_channels < spec.num_filters:
        derived = MelComponentTable(channels=derived.channels[: cfg.num_channels])
    if cfg.table is None:
        return derived
    return merge_component_tables(load_component_table(cfg.table), derived)


def tmfwc_extract(
    buf: AudioBuffer,
    spec: MelFilterbankSpec,
    cfg: TmfwcConfig,
    table: MelComponentTable,
    *,
    normalize: bool = True,
    threads: int = 1,
    kernels: tuple[MelWaveKernel, ...] | None = None,
    convolution: ConvolutionMode | str = ConvolutionMode.DIRECT,
) -> FeatureMatrix:
    """
    Convolve, take the magnitude and pool per channel; channels become columns.

    With normalize the whole matrix is divided by its maximum (silence stays all-zero).
    Channel order in the output is fixed regardless of `threads`.
    """
    if table.num_channels != cfg.num_channels:
        raise ConfigInvalid(
            f"component table has {table.num_channels} channels, config expects "
            f"{cfg.num_channels}"
        )
    if buf.sample_rate_hz != spec.sample_rate_hz:
        raise SampleRateMismatch(
            f"Audio is {buf.sample_rate_hz} Hz, filterbank expects {spec.sample_rate_hz} Hz"
        )
    if kernels is None:
        kernels = build_kernel_bank(table, buf.sample_rate_hz, cfg)
    window = pool_window_samples(cfg, buf.sample_rate_hz)

    def one_channel(kernel: MelWaveKernel) -> np.ndarray:
        real, imag = convolve_channel(buf, kernel, convolution)
        return abs_max_pool(magnitude_envelope(real, imag), window)

    if threads > 1 and len(kernels) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futs = [ex.submit(contextvars.copy_context().run, one_channel, k) for k in kernels]
            columns = [f.result() for f in futs]
    else:
        columns = [one_channel(k) for k in kernels]

    values = np.column_stack(columns)
    if normalize:
        peak = float(values.max())
        if peak > 0:
            values = values / peak
    return FeatureMatrix(
        values=values,
        column_names=tuple(f"ch{k.channel_index}" for k in kernels),
        step_hz=buf.sample_rate_hz / window,
    )
