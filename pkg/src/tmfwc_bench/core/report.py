from __future__ import annotations

import csv
import json
from pathlib import Path

from rich.console import Console
from rich.table import Table

from tmfwc_bench.core.results import ResultTable, TimingRow
from tmfwc_bench.errors import EmptyResults, IoFailure

ACCURACY_CSV = "accuracy.csv"
TIMING_CSV = "timing.csv"
SUMMARY_JSON = "summary.json"
ACCURACY_COLUMNS = ("task", "extractor", "seed", "value")
TIMING_COLUMNS = tuple(TimingRow.model_fields)


def _write_csv(path: Path, header: tuple[str, ...], rows: list[list[object]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _cell(v: object) -> object:
    return repr(v) if isinstance(v, float) else v


def emit_report(results: ResultTable, out_dir: str | Path) -> list[Path]:
    """
    Write accuracy.csv (long format), timing.csv and summary.json.

    Nothing is written for an empty table.
    """
    if results.is_empty():
        raise EmptyResults("result table is empty; nothing to report")
    out = Path(out_dir)
    accuracy = sorted(results.accuracy, key=lambda r: (r.task, r.extractor, r.seed))
    summary = {
        "run_id": results.run_id,
        "accuracy": [a.model_dump(mode="json") for a in results.aggregate()],
        "timing": [t.model_dump(mode="json") for t in results.timings],
    }
    paths = [out / ACCURACY_CSV, out / TIMING_CSV, out / SUMMARY_JSON]
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            paths[0],
            ACCURACY_COLUMNS,
            [[r.task, r.extractor, r.seed, repr(r.accuracy)] for r in accuracy],
        )
        _write_csv(
            paths[1],
            TIMING_COLUMNS,
            [[_cell(getattr(t, c)) for c in TIMING_COLUMNS] for t in results.timings],
        )
        paths[2].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Cannot write report to {out}: {e}") from e
    return paths


def render_results(results: ResultTable, console: Console) -> None:
    if results.accuracy:
        table = Table(title="Accuracy across reservoir seeds")
        for col in ("task", "extractor", "seeds", "mean", "sd", "chance"):
            table.add_column(col, justify="left" if col in {"task", "extractor"} else "right")
        for a in results.aggregate():
            table.add_row(
                a.task,
                a.extractor,
                str(a.n_seeds),
                f"{a.mean:.4f}",
                f"{a.sd:.4f}",
                f"{a.chance:.3f}",
            )
        console.print(table)
    if results.timings:
        table = Table(title="Timing")
        for col in ("extractor", "stage", "utts", "median ms", "MACs/utt", "transforms/utt"):
            table.add_column(col, justify="left" if col in {"extractor", "stage"} else "right")
        for t in results.timings:
            table.add_row(
                t.extractor,
                t.stage,
                str(t.utterances),
                f"{t.median_ms:.3f}",
                f"{t.macs_per_utterance:.0f}",
                f"{t.transforms_per_utterance:.1f}",
            )
        console.print(table)
