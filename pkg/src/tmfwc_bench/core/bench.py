"""
Extraction cost benchmark.

Each extractor runs single-threaded over every utterance: `warmups` untimed passes, then
`repetitions` timed passes. The per-utterance median is kept, and the row reports the median and
mean of those medians. Operation counts come from one separately instrumented pass, so they are
exact and unaffected by timing noise.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence

import numpy as np

from tmfwc_bench.core.config import AppConfig
from tmfwc_bench.core.dataset import Utterance
from tmfwc_bench.core.results import ResultTable, TimingRow
from tmfwc_bench.core.runner import load_audio
from tmfwc_bench.dsp.counters import count_ops
from tmfwc_bench.dsp.signal_io import AudioBuffer
from tmfwc_bench.dsp.tmfwc import ConvolutionMode
from tmfwc_bench.errors import EmptyDataset
from tmfwc_bench.extractors import ExtractorName, FeatureExtractor, get_extractor

log = logging.getLogger(__name__)

FFT_CONVOLUTION_ROW = "tmfwc-fft"


def bench_extractors(cfg: AppConfig) -> list[tuple[str, FeatureExtractor]]:
    rows: list[tuple[str, FeatureExtractor]] = [
        (name.value, get_extractor(name, cfg, threads=1)) for name in ExtractorName
    ]
    if cfg.bench.include_fft_convolution:
        fft = get_extractor(ExtractorName.TMFWC, cfg, threads=1, convolution=ConvolutionMode.FFT)
        rows.append((FFT_CONVOLUTION_ROW, fft))
    return rows


def time_extractor(
    name: str,
    extractor: FeatureExtractor,
    buffers: Sequence[AudioBuffer],
    repetitions: int,
    warmups: int,
) -> TimingRow:
    medians: list[float] = []
    macs = transforms = samples = rows = 0
    for buf in buffers:
        with count_ops() as ops:
            fm = extractor.extract(buf)
        macs += ops.macs
        transforms += ops.transforms
        samples += len(buf)
        rows += fm.rows

        for _ in range(warmups):
            extractor.extract(buf)
        elapsed = np.empty(repetitions)
        for i in range(repetitions):
            t0 = time.perf_counter()
            extractor.extract(buf)
            elapsed[i] = (time.perf_counter() - t0) * 1000.0
        medians.append(float(np.median(elapsed)))

    n = len(buffers)
    log.info("bench %s: %d utterance(s), median %.3f ms", name, n, float(np.median(medians)))
    return TimingRow(
        extractor=name,
        stage="extract",
        utterances=n,
        repetitions=repetitions,
        median_ms=float(np.median(medians)),
        mean_ms=float(np.mean(medians)),
        macs_per_utterance=macs / n,
        transforms_per_utterance=transforms / n,
        reduction_ratio=samples / rows if rows else 0.0,
    )


def benchmark_extraction(data: Sequence[Utterance], cfg: AppConfig) -> ResultTable:
    """One timing row per extractor (tmfwc, mfcc, dwt, optionally tmfwc-fft)."""
    if not data:
        raise EmptyDataset("benchmark needs at least one utterance")
    ordered = sorted(data, key=lambda u: u.id)
    audio = load_audio(ordered)
    buffers = [audio[u.id] for u in ordered]
    timings = [
        time_extractor(name, ex, buffers, cfg.bench.repetitions, cfg.bench.warmups)
        for name, ex in bench_extractors(cfg)
    ]
    return ResultTable(timings=timings)
