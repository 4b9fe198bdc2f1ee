from __future__ import annotations

from typing import Any

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.mfcc import (
    MelFilterbankSpec,
    MfccConfig,
    cepstral_column_names,
    mfcc_pipeline,
)
from tmfwc_bench.dsp.signal_io import AudioBuffer, FramingConfig, ms_to_samples
from tmfwc_bench.extractors.base import FeatureExtractor, PreflightIssue, sample_rate_issue


class MfccExtractor(FeatureExtractor):
    name = "mfcc"

    def __init__(self, spec: MelFilterbankSpec, cfg: MfccConfig, framing: FramingConfig) -> None:
        self.spec = spec
        self.cfg = cfg
        self.framing = framing

    @property
    def column_names(self) -> tuple[str, ...]:
        return cepstral_column_names(self.cfg)

    def preflight(self, buf: AudioBuffer) -> list[PreflightIssue]:
        issues = sample_rate_issue(buf, self.spec.sample_rate_hz)
        frame_len = ms_to_samples(self.framing.frame_ms, buf.sample_rate_hz)
        if frame_len > self.spec.fft_size:
            issues.append(
                PreflightIssue(
                    level="ERROR",
                    message=f"frame of {frame_len} samples exceeds fft_size {self.spec.fft_size}",
                    fix="raise filterbank.fft_size or shorten signal.frame_ms",
                )
            )
        return issues

    def extract(self, buf: AudioBuffer) -> FeatureMatrix:
        return mfcc_pipeline(buf, self.spec, self.cfg, self.framing)

    def config_payload(self) -> dict[str, Any]:
        return {
            "filterbank": self.spec.model_dump(mode="json"),
            "mfcc": self.cfg.model_dump(mode="json"),
            "signal": self.framing.model_dump(mode="json"),
        }
