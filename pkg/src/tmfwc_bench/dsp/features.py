from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tmfwc_bench.errors import DimensionMismatch, IoFailure, MalformedContainer

BINARY_MAGIC = b"TMFWCFM1"
_HEADER = struct.Struct("<8sII")  # 16 bytes: magic, rows, cols


@dataclass(frozen=True)
class FeatureMatrix:
    """Time-step x channel matrix; the reservoir's input sequence."""

    values: np.ndarray
    column_names: tuple[str, ...]
    step_hz: float = 0.0  # rows per second, 0 when unknown

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DimensionMismatch(f"FeatureMatrix must be 2-D, got shape {values.shape}")
        names = tuple(self.column_names)
        if len(names) != values.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} column names for {values.shape[1]} columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])


def write_csv(fm: FeatureMatrix, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fm.column_names)
            for row in fm.values:
                w.writerow([repr(float(v)) for v in row])
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def read_csv(path: str | Path, step_hz: float = 0.0) -> FeatureMatrix:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e
    if not rows:
        raise MalformedContainer(f"{path}: empty feature CSV")
    header, body = rows[0], rows[1:]
    values = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    values = values.reshape(len(body), len(header))
    return FeatureMatrix(values=values, column_names=tuple(header), step_hz=step_hz)


def to_bytes(fm: FeatureMatrix) -> bytes:
    header = _HEADER.pack(BINARY_MAGIC, fm.rows, fm.cols)
    return header + np.ascontiguousarray(fm.values, dtype="<f8").tobytes()


def from_bytes(blob: bytes, column_names: tuple[str, ...] | None = None) -> FeatureMatrix:
    if len(blob) < _HEADER.size:
        raise MalformedContainer("Feature dump shorter than its 16-byte header")
    magic, rows, cols = _HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise MalformedContainer(f"Bad feature dump magic: {magic!r}")
    payload = blob[_HEADER.size :]
    if len(payload) != rows * cols * 8:
        raise MalformedContainer(
            f"Feature dump payload is {len(payload)} bytes, expected {rows * cols * 8}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    names = column_names or tuple(f"x{i + 1}" for i in range(cols))
    return FeatureMatrix(values=values, column_names=names)


def write_binary(fm: FeatureMatrix, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(to_bytes(fm))
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path


def read_binary(path: str | Path, column_names: tuple[str, ...] | None = None) -> FeatureMatrix:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e
    return from_bytes(blob, column_names)
