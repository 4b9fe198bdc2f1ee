from __future__ import annotations

import hashlib
from functools import cached_property
from typing import Any

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.mfcc import FilterShape, MelFilterbankSpec
from tmfwc_bench.dsp.signal_io import AudioBuffer
from tmfwc_bench.dsp.tmfwc import (
    ConvolutionMode,
    MelComponentTable,
    MelWaveKernel,
    TmfwcConfig,
    build_kernel_bank,
    resolve_component_table,
    resolve_table_path,
    tmfwc_extract,
)
from tmfwc_bench.extractors.base import FeatureExtractor, PreflightIssue, sample_rate_issue


class TmfwcExtractor(FeatureExtractor):
    name = "tmfwc"

    def __init__(
        self,
        cfg: TmfwcConfig,
        sample_rate_hz: int,
        *,
        fft_size: int = 1024,
        shape: FilterShape = FilterShape.TRIANGULAR,
        threads: int = 1,
        convolution: ConvolutionMode = ConvolutionMode.DIRECT,
    ) -> None:
        self.cfg = cfg
        self.sample_rate_hz = int(sample_rate_hz)
        self.fft_size = fft_size
        self.shape = FilterShape(shape)
        self.threads = max(1, int(threads))
        self.convolution = ConvolutionMode(convolution)

    @cached_property
    def spec(self) -> MelFilterbankSpec:
        return self.cfg.filterbank_spec(self.sample_rate_hz, self.fft_size, self.shape)

    @cached_property
    def table(self) -> MelComponentTable:
        return resolve_component_table(self.cfg, self.spec)

    @cached_property
    def kernels(self) -> tuple[MelWaveKernel, ...]:
        return build_kernel_bank(self.table, self.sample_rate_hz, self.cfg)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(f"ch{k.channel_index}" for k in self.kernels)

    def preflight(self, buf: AudioBuffer) -> list[PreflightIssue]:
        return sample_rate_issue(buf, self.sample_rate_hz)

    def extract(self, buf: AudioBuffer) -> FeatureMatrix:
        return tmfwc_extract(
            buf,
            self.spec,
            self.cfg,
            self.table,
            threads=self.threads,
            kernels=self.kernels,
            convolution=self.convolution,
        )

    def config_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "tmfwc": self.cfg.model_dump(mode="json"),
            "sample_rate_hz": self.sample_rate_hz,
            "fft_size": self.fft_size,
            "shape": self.shape.value,
        }
        if self.cfg.table is not None:
            # table edits must invalidate cached features
            data = resolve_table_path(self.cfg.table).read_bytes()
            payload["table_sha256"] = hashlib.sha256(data).hexdigest()
        return payload
