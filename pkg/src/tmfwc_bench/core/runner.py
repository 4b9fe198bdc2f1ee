from __future__ import annotations

import concurrent.futures
import json
import logging
import os
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tmfwc_bench.core.cache import FeatureCache
from tmfwc_bench.core.config import AppConfig, PreflightMode
from tmfwc_bench.core.dataset import Utterance, stratified_split
from tmfwc_bench.core.results import AccuracyRow, ResultTable, TimingRow
from tmfwc_bench.dsp.counters import count_ops
from tmfwc_bench.dsp.features import FeatureMatrix
from tmfwc_bench.dsp.signal_io import AudioBuffer, load_wav
from tmfwc_bench.errors import ConfigInvalid, PreflightFailed
from tmfwc_bench.extractors import FeatureExtractor, PreflightIssue, get_extractor
from tmfwc_bench.reservoir.esn import Reservoir, StateSummary, init_reservoir, run_sequence
from tmfwc_bench.reservoir.readout import (
    ModelArtifact,
    ReadoutRecord,
    ReadoutWeights,
    Task,
    classify,
    train_multitask,
)

log = logging.getLogger(__name__)

RUNS_DIR = Path(".tmfwc-bench") / "runs"
DATASET_ISSUE_KEY = "<dataset>"


def make_run_id() -> str:
    # timestamp + short random suffix (PID + millis)
    return f"{time.strftime('%Y%m%d-%H%M%S')}-{os.getpid()}-{int(time.time() * 1000) % 100000}"


def prepare_run_dir(out: str | Path | None) -> tuple[str, Path]:
    run_id = make_run_id()
    run_dir = Path(out) if out else Path.cwd() / RUNS_DIR / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_id, run_dir


def write_run_manifest(run_dir: Path, payload: dict[str, object]) -> Path:
    path = run_dir / "run.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _format_preflight_issues(issues_by_utt: dict[str, list[PreflightIssue]]) -> str:
    lines: list[str] = ["Preflight failed.", ""]
    for name in sorted(issues_by_utt):
        for it in issues_by_utt[name]:
            lines.append(f"- {name}: {it.level}: {it.message}")
            if it.fix:
                lines.append(f"  Fix: {it.fix}")
    return "\n".join(lines).rstrip()


def _dataset_issues(data: Sequence[Utterance]) -> list[PreflightIssue]:
    issues: list[PreflightIssue] = []
    digits = {u.digit_label for u in data}
    speakers = {u.speaker_label for u in data}
    if len(digits) < 2:
        issues.append(PreflightIssue("ERROR", f"only {len(digits)} digit class(es) present"))
    if len(speakers) < 2:
        issues.append(PreflightIssue("ERROR", f"only {len(speakers)} speaker(s) present"))
    return issues


def preflight(
    data: Sequence[Utterance],
    buffers: dict[str, AudioBuffer],
    extractor: FeatureExtractor,
    mode: PreflightMode,
) -> list[Utterance]:
    """
    Returns the approved utterances.

    strict  -> any ERROR aborts the run
    lenient -> utterances with ERROR are dropped; dataset-level ERRORs still abort
    """
    issues_by_utt: dict[str, list[PreflightIssue]] = {}
    approved: list[Utterance] = []
    for u in data:
        issues = extractor.preflight(buffers[u.id])
        if issues:
            issues_by_utt[u.id] = issues
        if not any(i.level == "ERROR" for i in issues):
            approved.append(u)

    for name, issues in issues_by_utt.items():
        for it in issues:
            if it.level == "WARN":
                log.warning("%s: %s", name, it.message)

    dataset_issues = _dataset_issues(approved)
    if dataset_issues:
        issues_by_utt[DATASET_ISSUE_KEY] = dataset_issues
        raise PreflightFailed(_format_preflight_issues(issues_by_utt))
    if len(approved) < len(data):
        if mode is PreflightMode.STRICT:
            raise PreflightFailed(_format_preflight_issues(issues_by_utt))
        log.warning("preflight skipped %d utterance(s)", len(data) - len(approved))
    return approved


def load_audio(data: Sequence[Utterance]) -> dict[str, AudioBuffer]:
    return {u.id: load_wav(u.path) for u in data}


@dataclass
class FeatureSet:
    features: dict[str, FeatureMatrix] = field(default_factory=dict)
    extract_ms: list[float] = field(default_factory=list)
    macs: int = 0
    transforms: int = 0
    computed: int = 0
    samples: int = 0
    rows: int = 0


def extract_features(
    data: Sequence[Utterance],
    buffers: dict[str, AudioBuffer],
    extractor: FeatureExtractor,
    *,
    cache: FeatureCache | None = None,
    threads: int = 1,
) -> FeatureSet:
    """Extract (or fetch from the cache) one FeatureMatrix per utterance."""
    extractor_key = extractor.cache_key()

    def one(u: Utterance) -> tuple[str, FeatureMatrix, float | None, int, int]:
        key = cache.key(u.path, extractor_key) if cache is not None else ""
        if cache is not None:
            hit = cache.get(key, extractor.column_names)
            if hit is not None:
                return u.id, hit, None, 0, 0
        with count_ops() as ops:
            t0 = time.perf_counter()
            fm = extractor.extract(buffers[u.id])
            elapsed = (time.perf_counter() - t0) * 1000.0
        if cache is not None:
            cache.put(key, fm)
        return u.id, fm, elapsed, ops.macs, ops.transforms

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            outcomes = list(ex.map(one, data))
    else:
        outcomes = [one(u) for u in data]

    out = FeatureSet()
    for uid, fm, elapsed, macs, transforms in outcomes:
        out.features[uid] = fm
        if elapsed is not None:
            out.extract_ms.append(elapsed)
            out.macs += macs
            out.transforms += transforms
            out.computed += 1
            out.samples += len(buffers[uid])
            out.rows += fm.rows
    return out


def summarize(
    reservoir: Reservoir, data: Sequence[Utterance], features: dict[str, FeatureMatrix]
) -> tuple[list[StateSummary], list[float]]:
    summaries: list[StateSummary] = []
    elapsed: list[float] = []
    for u in data:
        t0 = time.perf_counter()
        summaries.append(run_sequence(reservoir, features[u.id]))
        elapsed.append((time.perf_counter() - t0) * 1000.0)
    return summaries, elapsed


def task_labels(train: Sequence[Utterance], control: bool, seed: int) -> dict[Task, list[str]]:
    labels: dict[Task, list[str]] = {
        Task.DIGIT: [str(u.digit_label) for u in train],
        Task.SPEAKER: [u.speaker_label for u in train],
    }
    if control:
        rng = np.random.Generator(np.random.PCG64(seed))
        pairs = ((Task.DIGIT_CONTROL, Task.DIGIT), (Task.SPEAKER_CONTROL, Task.SPEAKER))
        for task, source in pairs:
            perm = rng.permutation(len(train))
            labels[task] = [labels[source][i] for i in perm]
    return labels


def true_label(u: Utterance, task: Task) -> str:
    if task in (Task.DIGIT, Task.DIGIT_CONTROL):
        return str(u.digit_label)
    return u.speaker_label


def score_readouts(
    readouts: dict[Task, ReadoutWeights],
    summaries: Sequence[StateSummary],
    test: Sequence[Utterance],
) -> tuple[dict[Task, float], list[float]]:
    """Fraction of correctly labelled test utterances per task."""
    correct = {task: 0 for task in readouts}
    elapsed: list[float] = []
    for u, s in zip(test, summaries, strict=True):
        t0 = time.perf_counter()
        for task, readout in readouts.items():
            cls, _ = classify(readout, s)
            if readout.class_labels[cls] == true_label(u, task):
                correct[task] += 1
        elapsed.append((time.perf_counter() - t0) * 1000.0)
    n = len(test)
    return {task: (c / n if n else 0.0) for task, c in correct.items()}, elapsed


def _stage_row(
    extractor: str, stage: str, samples_ms: Sequence[float], repetitions: int = 1, **extra: float
) -> TimingRow:
    arr = np.asarray(samples_ms, dtype=np.float64)
    return TimingRow(
        extractor=extractor,
        stage=stage,
        utterances=int(arr.size),
        repetitions=max(1, repetitions),
        median_ms=float(np.median(arr)) if arr.size else 0.0,
        mean_ms=float(np.mean(arr)) if arr.size else 0.0,
        **extra,
    )


def _extract_row(name: str, fs: FeatureSet) -> TimingRow:
    n = max(fs.computed, 1)
    return _stage_row(
        name,
        "extract",
        fs.extract_ms,
        macs_per_utterance=fs.macs / n,
        transforms_per_utterance=fs.transforms / n,
        reduction_ratio=fs.samples / fs.rows if fs.rows else 0.0,
    )


def _prepare(
    cfg: AppConfig, data: Sequence[Utterance]
) -> tuple[FeatureExtractor, dict[str, AudioBuffer], list[Utterance], list[Utterance]]:
    extractor = get_extractor(cfg.experiment.extractor, cfg, threads=1)
    ordered = sorted(data, key=lambda u: u.id)
    buffers = load_audio(ordered)
    approved = preflight(ordered, buffers, extractor, cfg.execution.preflight)
    train, test = stratified_split(approved, cfg.experiment.split)
    return extractor, buffers, train, test


def train_experiment(
    cfg: AppConfig,
    data: Sequence[Utterance],
    *,
    cache: FeatureCache | None = None,
) -> tuple[ResultTable, ModelArtifact]:
    """
    Train digit and speaker readouts on every reservoir seed; score them on the test split.

    Features are extracted once and shared by all seeds.
    """
    extractor, buffers, train, test = _prepare(cfg, data)
    log.info("train=%d test=%d extractor=%s", len(train), len(test), extractor.name)
    fs = extract_features(
        train + test, buffers, extractor, cache=cache, threads=cfg.execution.threads
    )

    accuracy: list[AccuracyRow] = []
    seeds: dict[int, dict[Task, ReadoutRecord]] = {}
    reservoir_ms: list[float] = []
    train_ms: list[float] = []
    classify_ms: list[float] = []
    for seed in cfg.reservoir_seeds():
        params = cfg.reservoir.model_copy(update={"seed": seed})
        reservoir = init_reservoir(params, extractor.output_dim)
        train_summaries, r_ms = summarize(reservoir, train, fs.features)
        test_summaries, t_ms = summarize(reservoir, test, fs.features)
        reservoir_ms += r_ms + t_ms

        t0 = time.perf_counter()
        labels = task_labels(train, cfg.experiment.control, seed)
        readouts = train_multitask(
            reservoir, train_summaries, labels, cfg.readout.ridge_lambda
        )
        train_ms.append((time.perf_counter() - t0) * 1000.0)

        scores, c_ms = score_readouts(readouts, test_summaries, test)
        classify_ms += c_ms
        for task, acc in scores.items():
            log.info("seed=%d task=%s accuracy=%.4f", seed, task.value, acc)
            accuracy.append(
                AccuracyRow(
                    task=task.value,
                    extractor=extractor.name,
                    seed=seed,
                    accuracy=acc,
                    n_test=len(test),
                    num_classes=readouts[task].num_classes,
                )
            )
        seeds[seed] = {t: ReadoutRecord.from_weights(w) for t, w in readouts.items()}

    n_seeds = len(seeds)
    timings = [
        _extract_row(extractor.name, fs),
        _stage_row(extractor.name, "reservoir", reservoir_ms, n_seeds),
        _stage_row(extractor.name, "train", train_ms, n_seeds),
        _stage_row(extractor.name, "classify", classify_ms, n_seeds),
    ]
    model = ModelArtifact(
        params=cfg.reservoir,
        input_dim=extractor.output_dim,
        extractor=extractor.name,
        extractor_key=extractor.cache_key(),
        seeds=seeds,
    )
    return ResultTable(accuracy=accuracy, timings=timings), model


def run_experiment(
    cfg: AppConfig,
    data: Sequence[Utterance],
    *,
    cache: FeatureCache | None = None,
) -> ResultTable:
    return train_experiment(cfg, data, cache=cache)[0]


def evaluate_model(
    cfg: AppConfig,
    model: ModelArtifact,
    data: Sequence[Utterance],
    *,
    cache: FeatureCache | None = None,
) -> ResultTable:
    """Rebuild each seed's reservoir from the model's parameters and score its readouts."""
    extractor = get_extractor(cfg.experiment.extractor, cfg, threads=1)
    if model.extractor != extractor.name or model.input_dim != extractor.output_dim:
        raise ConfigInvalid(
            f"dimension mismatch: model expects {model.input_dim}-dimensional "
            f"{model.extractor} features, the {extractor.name} extractor yields "
            f"{extractor.output_dim}"
        )
    if model.extractor_key and model.extractor_key != extractor.cache_key():
        log.warning("extractor configuration differs from the one the model was trained with")

    _, buffers, _, test = _prepare(cfg, data)
    fs = extract_features(test, buffers, extractor, cache=cache, threads=cfg.execution.threads)

    accuracy: list[AccuracyRow] = []
    reservoir_ms: list[float] = []
    classify_ms: list[float] = []
    for seed in sorted(model.seeds):
        reservoir = init_reservoir(model.params.model_copy(update={"seed": seed}), model.input_dim)
        readouts = model.readouts(seed)
        summaries, r_ms = summarize(reservoir, test, fs.features)
        reservoir_ms += r_ms
        scores, c_ms = score_readouts(readouts, summaries, test)
        classify_ms += c_ms
        for task, acc in scores.items():
            accuracy.append(
                AccuracyRow(
                    task=task.value,
                    extractor=extractor.name,
                    seed=seed,
                    accuracy=acc,
                    n_test=len(test),
                    num_classes=readouts[task].num_classes,
                )
            )

    n_seeds = len(model.seeds)
    timings = [
        _extract_row(extractor.name, fs),
        _stage_row(extractor.name, "reservoir", reservoir_ms, n_seeds),
        _stage_row(extractor.name, "classify", classify_ms, n_seeds),
    ]
    return ResultTable(accuracy=accuracy, timings=timings)
