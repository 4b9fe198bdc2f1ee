from tmfwc_bench.extractors.base import ExtractorName, FeatureExtractor, PreflightIssue
from tmfwc_bench.extractors.registry import get_extractor

__all__ = ["ExtractorName", "FeatureExtractor", "PreflightIssue", "get_extractor"]
