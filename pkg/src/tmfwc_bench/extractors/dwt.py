from __future__ import annotations

from typing import Any

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.signal_io import AudioBuffer, FramingConfig, ms_to_samples
from tmfwc_bench.dsp.wavelet import DwtConfig, dwt_column_names, dwt_features, level_cap
from tmfwc_bench.extractors.base import FeatureExtractor, PreflightIssue, sample_rate_issue


class DwtExtractor(FeatureExtractor):
    name = "dwt"

    def __init__(self, cfg: DwtConfig, framing: FramingConfig, sample_rate_hz: int) -> None:
        self.cfg = cfg
        self.framing = framing
        self.sample_rate_hz = int(sample_rate_hz)

    @property
    def column_names(self) -> tuple[str, ...]:
        return dwt_column_names(self.cfg.levels)

    def preflight(self, buf: AudioBuffer) -> list[PreflightIssue]:
        issues = sample_rate_issue(buf, self.sample_rate_hz)
        frame_len = ms_to_samples(self.framing.frame_ms, buf.sample_rate_hz)
        cap = level_cap(frame_len, self.cfg.wavelet_spec())
        if self.cfg.levels > cap:
            issues.append(
                PreflightIssue(
                    level="ERROR",
                    message=(
                        f"{self.cfg.levels} {self.cfg.family.value} levels do not fit "
                        f"{frame_len}-sample frames (max {cap})"
                    ),
                    fix="lower dwt.levels or lengthen signal.frame_ms",
                )
            )
        return issues

    def extract(self, buf: AudioBuffer) -> FeatureMatrix:
        return dwt_features(buf, self.cfg, self.framing, self.sample_rate_hz)

    def config_payload(self) -> dict[str, Any]:
        return {
            "dwt": self.cfg.model_dump(mode="json"),
            "signal": self.framing.model_dump(mode="json"),
            "sample_rate_hz": self.sample_rate_hz,
        }
