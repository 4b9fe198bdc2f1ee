from __future__ import annotations

import pytest

from tmfwc_bench.core.bench import FFT_CONVOLUTION_ROW, benchmark_extraction
from tmfwc_bench.core.config import build_config
from tmfwc_bench.core.dataset import DatasetLayout, load_dataset
from tmfwc_bench.errors import EmptyDataset


def _bench_cfg(**bench):
    return build_config({"bench": {"repetitions": 2, "warmups": 0, **bench}})


def test_one_row_per_extractor(dataset_dir):
    data = load_dataset(dataset_dir, DatasetLayout.AUDIO_MNIST)[:4]
    rows = {t.extractor: t for t in benchmark_extraction(data, _bench_cfg()).timings}
    assert set(rows) == {"tmfwc", "mfcc", "dwt"}
    for row in rows.values():
        assert row.stage == "extract"
        assert row.utterances == 4
        assert row.repetitions == 2
        assert row.median_ms > 0.0
        assert row.reduction_ratio > 1.0

    # 0.25 s at 8 kHz: 24 frames of 20 ms every 10 ms
    assert rows["mfcc"].transforms_per_utterance == 24
    assert rows["tmfwc"].transforms_per_utterance == 0
    assert rows["tmfwc"].macs_per_utterance == 10 * 2 * 200 * 2000
    # 2000 samples pooled 64 at a time
    assert rows["tmfwc"].reduction_ratio == pytest.approx(2000 / 32)


def test_fft_convolution_row(dataset_dir):
    data = load_dataset(dataset_dir, DatasetLayout.AUDIO_MNIST)[:2]
    rows = {
        t.extractor: t
        for t in benchmark_extraction(data, _bench_cfg(include_fft_convolution=True)).timings
    }
    assert list(rows) == ["tmfwc", "mfcc", "dwt", FFT_CONVOLUTION_ROW]
    assert rows[FFT_CONVOLUTION_ROW].transforms_per_utterance == 6 * 10
    assert rows[FFT_CONVOLUTION_ROW].macs_per_utterance == 0


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        benchmark_extraction([], _bench_cfg())
