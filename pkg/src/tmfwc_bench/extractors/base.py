from __future__ import annotations

import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, ClassVar

from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.signal_io import AudioBuffer


class ExtractorName(StrEnum):
    TMFWC = "tmfwc"
    MFCC = "mfcc"
    DWT = "dwt"


@dataclass(frozen=True)
class PreflightIssue:
    """
    A lightweight preflight validation issue.

    - level: "ERROR" blocks execution in strict mode
    - message: short, actionable message
    - fix: optional, concrete fix instruction
    """

    level: str  # "ERROR" | "WARN"
    message: str
    fix: str | None = None


class FeatureExtractor(ABC):
    """
    Turns one utterance into a FeatureMatrix. Implementations hold only their configuration
    (plus derived, immutable state such as kernels) so one instance can serve many threads.
    """

    name: ClassVar[str]

    def preflight(self, buf: AudioBuffer) -> list[PreflightIssue]:
        return []

    @abstractmethod
    def extract(self, buf: AudioBuffer) -> FeatureMatrix:
        raise NotImplementedError

    @property
    @abstractmethod
    def column_names(self) -> tuple[str, ...]:
        raise NotImplementedError

    @abstractmethod
    def config_payload(self) -> dict[str, Any]:
        raise NotImplementedError

    @property
    def output_dim(self) -> int:
        return len(self.column_names)

    def cache_key(self) -> str:
        blob = json.dumps(
            {"extractor": self.name, "config": self.config_payload()},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def sample_rate_issue(buf: AudioBuffer, expected_hz: int) -> list[PreflightIssue]:
    if buf.sample_rate_hz == expected_hz:
        return []
    return [
        PreflightIssue(
            level="ERROR",
            message=f"sample rate is {buf.sample_rate_hz} Hz, pipeline expects {expected_hz} Hz",
            fix="resample the dataset or set filterbank.sample_rate_hz to match",
        )
    ]
