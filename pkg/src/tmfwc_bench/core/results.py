from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from tmfwc_bench.errors import IoFailure, MalformedContainer

RESULTS_NAME = "results.json"


class _Row(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AccuracyRow(_Row):
    task: str
    extractor: str
    seed: int
    accuracy: float = Field(ge=0.0, le=1.0)
    n_test: int = Field(default=0, ge=0)
    num_classes: int = Field(default=0, ge=0)


class TimingRow(_Row):
    """One timed stage; the benchmark emits one `extract` row per extractor."""

    extractor: str
    stage: str = "extract"
    utterances: int = Field(ge=0)
    repetitions: int = Field(default=1, ge=1)
    median_ms: float = Field(ge=0.0)
    mean_ms: float = Field(ge=0.0)
    macs_per_utterance: float = Field(default=0.0, ge=0.0)
    transforms_per_utterance: float = Field(default=0.0, ge=0.0)
    reduction_ratio: float = Field(default=0.0, ge=0.0)


class AggregateRow(_Row):
    task: str
    extractor: str
    n_seeds: int
    mean: float
    sd: float
    chance: float


def mean_sd(values: list[float]) -> tuple[float, float]:
    """Sample standard deviation (ddof=1); 0 for a single value."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), sd


class ResultTable(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run_id: str = ""
    accuracy: list[AccuracyRow] = Field(default_factory=list)
    timings: list[TimingRow] = Field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.accuracy and not self.timings

    def aggregate(self) -> list[AggregateRow]:
        groups: dict[tuple[str, str], list[AccuracyRow]] = {}
        for row in self.accuracy:
            groups.setdefault((row.task, row.extractor), []).append(row)
        out: list[AggregateRow] = []
        for (task, extractor), rows in sorted(groups.items()):
            mean, sd = mean_sd([r.accuracy for r in rows])
            classes = max(r.num_classes for r in rows)
            out.append(
                AggregateRow(
                    task=task,
                    extractor=extractor,
                    n_seeds=len(rows),
                    mean=mean,
                    sd=sd,
                    chance=1.0 / classes if classes else 0.0,
                )
            )
        return out

    def summary(self) -> str:
        parts = [f"{a.task}/{a.extractor}={a.mean:.3f}±{a.sd:.3f}" for a in self.aggregate()]
        head = f"run_id={self.run_id} " if self.run_id else ""
        return head + (" ".join(parts) if parts else f"timing_rows={len(self.timings)}")


def save_results(results: ResultTable, out_dir: str | Path) -> Path:
    path = Path(out_dir) / RESULTS_NAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(results.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def load_results(path: str | Path) -> ResultTable:
    """Accepts the results.json file itself or the run directory holding it."""
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Cannot read results {path}: {e}") from e
    try:
        return ResultTable.model_validate_json(text)
    except ValidationError as e:
        raise MalformedContainer(f"{path}: not a valid results file\n{e}") from e
