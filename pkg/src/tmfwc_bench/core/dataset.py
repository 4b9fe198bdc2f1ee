from __future__ import annotations

import csv
import logging
import math
import re
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tmfwc_bench.errors import (
    DuplicateUtterance,
    EmptyCell,
    EmptyDataset,
    IoFailure,
    MalformedContainer,
    UnparseableName,
)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ("id", "path", "digit", "speaker")

# {digit}_{speaker}_{take}.wav; AudioMNIST nests files in per-speaker folders, FSDD is flat
_NAME_RE = re.compile(r"^(?P<digit>\d)_(?P<speaker>[A-Za-z0-9-]+)_(?P<take>\d+)\.wav$", re.I)


class DatasetLayout(StrEnum):
    AUDIO_MNIST = "audiomnist"
    FSDD = "fsdd"
    MANIFEST_CSV = "manifest"


class SplitConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_frac: float = Field(default=0.8, gt=0.0, lt=1.0)
    stratified: bool = True
    seed: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class Utterance:
    id: str
    path: Path
    digit_label: int
    speaker_label: str

    def __post_init__(self) -> None:
        if not 0 <= self.digit_label <= 9:
            raise UnparseableName(f"{self.id}: digit label {self.digit_label} outside 0-9")
        if not self.speaker_label:
            raise UnparseableName(f"{self.id}: empty speaker label")


def parse_utterance_name(path: Path) -> Utterance:
    m = _NAME_RE.match(path.name)
    if not m:
        raise UnparseableName(f"{path.name} does not match {{digit}}_{{speaker}}_{{take}}.wav")
    return Utterance(
        id=path.stem,
        path=path,
        digit_label=int(m.group("digit")),
        speaker_label=m.group("speaker"),
    )


def _scan_files(root: Path, pattern: str) -> tuple[list[Utterance], int]:
    found: list[Utterance] = []
    skipped = 0
    for path in sorted(root.glob(pattern)):
        if not path.is_file():
            continue
        try:
            found.append(parse_utterance_name(path))
        except UnparseableName as e:
            skipped += 1
            log.debug("skipping %s", e)
    return found, skipped


def _read_manifest(root: Path) -> tuple[list[Utterance], int]:
    manifest = root if root.is_file() else root / MANIFEST_NAME
    base = manifest.parent
    found: list[Utterance] = []
    skipped = 0
    try:
        with manifest.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise MalformedContainer(f"{manifest}: missing columns {sorted(missing)}")
            for row in reader:
                try:
                    found.append(
                        Utterance(
                            id=row["id"].strip(),
                            path=base / row["path"].strip(),
                            digit_label=int(row["digit"]),
                            speaker_label=row["speaker"].strip(),
                        )
                    )
                except (ValueError, UnparseableName) as e:
                    skipped += 1
                    log.debug("skipping manifest row %r: %s", row, e)
    except OSError as e:
        raise IoFailure(f"Cannot read manifest {manifest}: {e}") from e
    return found, skipped


def load_dataset(root: str | Path, layout: DatasetLayout | str) -> list[Utterance]:
    """
    Index a dataset directory. Names that do not fit the layout are skipped and counted.
    The result is ordered lexicographically by utterance id.
    """
    root = Path(root)
    layout = DatasetLayout(layout)
    if not root.exists():
        raise IoFailure(f"Dataset not found: {root}")

    if layout is DatasetLayout.MANIFEST_CSV:
        found, skipped = _read_manifest(root)
    elif layout is DatasetLayout.AUDIO_MNIST:
        found, skipped = _scan_files(root, "**/*.wav")
    else:
        found, skipped = _scan_files(root, "*.wav")

    if skipped:
        log.warning("skipped %d file(s) not matching the %s layout", skipped, layout.value)
    if not found:
        raise EmptyDataset(f"No utterances found in {root} (layout {layout.value})")

    by_id: dict[str, Utterance] = {}
    for u in found:
        if u.id in by_id:
            raise DuplicateUtterance(f"utterance id {u.id!r} appears twice ({u.path})")
        by_id[u.id] = u
    return [by_id[k] for k in sorted(by_id)]


def _train_count(n: int, frac: float) -> int:
    if n < 2:
        return n
    return min(n - 1, max(1, math.floor(frac * n + 0.5)))


def stratified_split(
    data: Sequence[Utterance], cfg: SplitConfig
) -> tuple[list[Utterance], list[Utterance]]:
    """
    Seeded split into (train, test), both ordered by id.

    Stratified mode splits every (digit, speaker) cell proportionally; each cell of two or more
    utterances keeps at least one on each side. The input order does not matter.
    """
    if not data:
        raise EmptyDataset("cannot split an empty dataset")
    ordered = sorted(data, key=lambda u: u.id)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    if cfg.stratified:
        cells: dict[tuple[int, str], list[Utterance]] = defaultdict(list)
        for u in ordered:
            cells[(u.digit_label, u.speaker_label)].append(u)
        digits = sorted({u.digit_label for u in ordered})
        speakers = sorted({u.speaker_label for u in ordered})
        empty = [(d, s) for d in digits for s in speakers if (d, s) not in cells]
        if empty:
            raise EmptyCell(
                f"{len(empty)} (digit, speaker) cell(s) have no utterances, e.g. {empty[0]}; "
                "disable stratification or complete the dataset"
            )
        groups = [cells[k] for k in sorted(cells)]
    else:
        groups = [ordered]

    train: list[Utterance] = []
    test: list[Utterance] = []
    for group in groups:
        perm = rng.permutation(len(group))
        k = _train_count(len(group), cfg.train_frac)
        train.extend(group[i] for i in perm[:k])
        test.extend(group[i] for i in perm[k:])
    return sorted(train, key=lambda u: u.id), sorted(test, key=lambda u: u.id)
