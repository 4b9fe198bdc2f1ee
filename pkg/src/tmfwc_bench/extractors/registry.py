from __future__ import annotations

from typing import TYPE_CHECKING

from tmfwc_bench.dsp.tmfwc import ConvolutionMode
from tmfwc_bench.errors import ConfigInvalid
from tmfwc_bench.extractors.base import ExtractorName, FeatureExtractor
from tmfwc_bench.extractors.dwt import DwtExtractor
from tmfwc_bench.extractors.mfcc import MfccExtractor
from tmfwc_bench.extractors.tmfwc import TmfwcExtractor

if TYPE_CHECKING:
    from tmfwc_bench.core.config import AppConfig


def get_extractor(
    name: str | ExtractorName,
    config: AppConfig,
    *,
    threads: int | None = None,
    convolution: ConvolutionMode = ConvolutionMode.DIRECT,
) -> FeatureExtractor:
    """
    Build the named extractor from the resolved configuration.

    `threads` overrides execution.threads (the benchmark pins it to 1).
    """
    try:
        kind = ExtractorName(str(name).strip().lower())
    except ValueError as e:
        valid = ", ".join(n.value for n in ExtractorName)
        raise ConfigInvalid(f"Unknown extractor: {name!r} (expected one of {valid})") from e

    sample_rate = config.filterbank.sample_rate_hz
    if kind is ExtractorName.TMFWC:
        return TmfwcExtractor(
            config.tmfwc,
            sample_rate,
            fft_size=config.filterbank.fft_size,
            shape=config.filterbank.shape,
            threads=config.execution.threads if threads is None else threads,
            convolution=convolution,
        )
    if kind is ExtractorName.MFCC:
        return MfccExtractor(config.filterbank, config.mfcc, config.signal)
    return DwtExtractor(config.dwt, config.signal, sample_rate)
