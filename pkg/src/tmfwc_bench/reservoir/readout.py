from __future__ import annotations

import json
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError
from scipy import linalg

from tmfwc_bench.errors import (
    ConfigInvalid,
    DimensionMismatch,
    IllConditioned,
    InsufficientData,
    IoFailure,
    MalformedContainer,
)
from tmfwc_bench.reservoir.esn import Reservoir, ReservoirParams, StateSummary


class Task(StrEnum):
    DIGIT = "digit"
    SPEAKER = "speaker"
    # label-shuffled controls; accuracy must sit near chance
    DIGIT_CONTROL = "digit-control"
    SPEAKER_CONTROL = "speaker-control"


@dataclass(frozen=True)
class ReadoutWeights:
    w_out: np.ndarray  # (classes, summary_dim + 1), bias last
    task: Task
    class_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        w = np.array(self.w_out, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != len(self.class_labels):
            raise DimensionMismatch(
                f"W_out shape {w.shape} does not match {len(self.class_labels)} classes"
            )
        w.setflags(write=False)
        object.__setattr__(self, "w_out", w)
        object.__setattr__(self, "class_labels", tuple(self.class_labels))

    @property
    def num_classes(self) -> int:
        return int(self.w_out.shape[0])

    @property
    def summary_dim(self) -> int:
        return int(self.w_out.shape[1]) - 1


def encode_labels(labels: Sequence[object]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map raw labels to class ids indexing their sorted unique string forms."""
    names = [str(v) for v in labels]
    classes = tuple(sorted(set(names)))
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[n] for n in names], dtype=np.int64), classes


def design_matrix(summaries: Sequence[StateSummary]) -> np.ndarray:
    if not summaries:
        raise InsufficientData("no training summaries")
    s = np.stack([x.concatenated for x in summaries])
    return np.hstack([s, np.ones((s.shape[0], 1))])


def train_readout(
    summaries: Sequence[StateSummary],
    labels: Sequence[int],
    ridge_lambda: float,
    task: Task,
    class_labels: Sequence[str] | None = None,
) -> ReadoutWeights:
    """
    Ridge regression onto one-hot targets over bias-augmented summaries.

    Solves (S^T S + lambda I) W^T = S^T Y with a Cholesky factorization; the bias column is
    regularized like every other column.
    """
    if ridge_lambda < 0:
        raise ConfigInvalid(f"ridge_lambda must be >= 0, got {ridge_lambda}")
    ids = np.asarray(labels, dtype=np.int64)
    if ids.shape != (len(summaries),):
        raise DimensionMismatch(f"{len(summaries)} summaries but {ids.size} labels")
    if ids.size == 0:
        raise InsufficientData(f"task {task.value}: no training examples")
    if class_labels is None:
        class_labels = tuple(str(i) for i in range(int(ids.max()) + 1))
    names = tuple(class_labels)
    num_classes = len(names)
    if ids.min() < 0 or ids.max() >= num_classes:
        raise DimensionMismatch(
            f"class ids must lie in [0, {num_classes}), got {ids.min()}..{ids.max()}"
        )
    counts = np.bincount(ids, minlength=num_classes)
    if np.any(counts == 0):
        missing = [names[i] for i in range(num_classes) if counts[i] == 0]
        raise InsufficientData(f"task {task.value}: no training examples for classes {missing}")

    s = design_matrix(summaries)
    y = np.zeros((s.shape[0], num_classes))
    y[np.arange(s.shape[0]), ids] = 1.0
    gram = s.T @ s + ridge_lambda * np.eye(s.shape[1])
    rhs = s.T @ y
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            solution = linalg.solve(gram, rhs, assume_a="pos")
    except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
        raise IllConditioned(
            f"task {task.value}: ridge system is singular at lambda={ridge_lambda}; "
            "raise readout.ridge_lambda"
        ) from e
    return ReadoutWeights(w_out=solution.T, task=task, class_labels=names)


def classify(readout: ReadoutWeights, summary: StateSummary) -> tuple[int, np.ndarray]:
    """scores = W_out [summary; 1]; argmax, lowest class id on ties."""
    x = summary.concatenated
    if x.size != readout.summary_dim:
        raise DimensionMismatch(
            f"summary has {x.size} values, readout expects {readout.summary_dim}"
        )
    scores = readout.w_out @ np.append(x, 1.0)
    return int(np.argmax(scores)), scores


def train_multitask(
    reservoir: Reservoir,
    summaries: Sequence[StateSummary],
    task_labels: Mapping[Task, Sequence[object]],
    ridge_lambda: float,
) -> dict[Task, ReadoutWeights]:
    """Independent readouts over one shared set of summaries."""
    expected = 2 * reservoir.n_nodes
    for s in summaries:
        if s.dim != expected:
            raise DimensionMismatch(f"summary has {s.dim} values, reservoir yields {expected}")
    out: dict[Task, ReadoutWeights] = {}
    for task, raw in task_labels.items():
        ids, classes = encode_labels(raw)
        out[Task(task)] = train_readout(summaries, ids, ridge_lambda, Task(task), classes)
    return out


class ReadoutRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    class_labels: list[str]
    w_out: list[list[float]]

    def to_weights(self, task: Task) -> ReadoutWeights:
        return ReadoutWeights(
            w_out=np.array(self.w_out), task=task, class_labels=tuple(self.class_labels)
        )

    @classmethod
    def from_weights(cls, weights: ReadoutWeights) -> ReadoutRecord:
        return cls(class_labels=list(weights.class_labels), w_out=weights.w_out.tolist())


class ModelArtifact(BaseModel):
    """Everything needed to rebuild the reservoirs and apply the trained readouts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    params: ReservoirParams
    input_dim: int
    extractor: str
    extractor_key: str = ""
    seeds: dict[int, dict[Task, ReadoutRecord]]

    def readouts(self, seed: int) -> dict[Task, ReadoutWeights]:
        return {task: rec.to_weights(task) for task, rec in self.seeds[seed].items()}


def save_model(model: ModelArtifact, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(model.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def load_model(path: str | Path) -> ModelArtifact:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Cannot read model {path}: {e}") from e
    try:
        return ModelArtifact.model_validate_json(text)
    except ValidationError as e:
        raise MalformedContainer(f"{path}: not a valid model file\n{e}") from e
