from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from tmfwc_bench.core.report import (
    ACCURACY_COLUMNS,
    ACCURACY_CSV,
    SUMMARY_JSON,
    TIMING_COLUMNS,
    TIMING_CSV,
    emit_report,
)
from tmfwc_bench.core.results import (
    AccuracyRow,
    ResultTable,
    TimingRow,
    load_results,
    mean_sd,
    save_results,
)
from tmfwc_bench.errors import EmptyResults, IoFailure, MalformedContainer


def _table() -> ResultTable:
    rng = np.random.default_rng(0)
    accuracy = [
        AccuracyRow(
            task=task,
            extractor="tmfwc",
            seed=seed,
            accuracy=float(rng.uniform(0.5, 1.0)),
            n_test=40,
            num_classes=classes,
        )
        for task, classes in (("digit", 10), ("speaker", 4))
        for seed in range(42, 52)
    ]
    timings = [
        TimingRow(
            extractor="tmfwc", utterances=40, median_ms=1.5, mean_ms=1.75, reduction_ratio=64.0
        )
    ]
    return ResultTable(run_id="r1", accuracy=accuracy, timings=timings)


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def test_accuracy_csv_is_long_format(tmp_path):
    paths = emit_report(_table(), tmp_path)
    assert [p.name for p in paths] == [ACCURACY_CSV, TIMING_CSV, SUMMARY_JSON]
    rows = _read_csv(tmp_path / ACCURACY_CSV)
    assert tuple(rows[0]) == ACCURACY_COLUMNS
    assert len(rows) == 21
    assert rows[1][:3] == ["digit", "tmfwc", "42"]


def test_summary_matches_rows(tmp_path):
    table = _table()
    emit_report(table, tmp_path)
    rows = _read_csv(tmp_path / ACCURACY_CSV)[1:]
    summary = json.loads((tmp_path / SUMMARY_JSON).read_text(encoding="utf-8"))
    by_task = {a["task"]: a for a in summary["accuracy"]}
    for task in ("digit", "speaker"):
        values = [float(r[3]) for r in rows if r[0] == task]
        assert by_task[task]["mean"] == pytest.approx(np.mean(values), abs=1e-12)
        assert by_task[task]["sd"] == pytest.approx(np.std(values, ddof=1), abs=1e-12)
        assert by_task[task]["n_seeds"] == 10
    assert by_task["digit"]["chance"] == pytest.approx(0.1)
    assert by_task["speaker"]["chance"] == pytest.approx(0.25)
    assert summary["run_id"] == "r1"


def test_timing_csv(tmp_path):
    emit_report(_table(), tmp_path)
    rows = _read_csv(tmp_path / TIMING_CSV)
    assert tuple(rows[0]) == TIMING_COLUMNS
    record = dict(zip(rows[0], rows[1], strict=True))
    assert record["extractor"] == "tmfwc"
    assert record["stage"] == "extract"
    assert float(record["median_ms"]) == 1.5


def test_empty_table_writes_nothing(tmp_path):
    out = tmp_path / "report"
    with pytest.raises(EmptyResults):
        emit_report(ResultTable(), out)
    assert not out.exists()


def test_mean_sd():
    assert mean_sd([0.5]) == (0.5, 0.0)
    assert mean_sd([]) == (0.0, 0.0)
    mean, sd = mean_sd([0.0, 1.0])
    assert mean == 0.5
    assert sd == pytest.approx(np.sqrt(0.5))


def test_results_file_round_trip(tmp_path):
    table = _table()
    save_results(table, tmp_path)
    assert load_results(tmp_path) == table


def test_load_results_errors(tmp_path):
    with pytest.raises(IoFailure):
        load_results(tmp_path / "missing.json")
    bad = tmp_path / "results.json"
    bad.write_text('{"accuracy": [{"task": "digit"}]}', encoding="utf-8")
    with pytest.raises(MalformedContainer):
        load_results(bad)
