from __future__ import annotations

import csv
import json

import numpy as np
from conftest import build_dataset
from scipy.io import wavfile
from typer.testing import CliRunner

from tmfwc_bench import __version__
from tmfwc_bench.cli import app

runner = CliRunner()


def _header(path):
    with path.open(encoding="utf-8", newline="") as fh:
        return next(csv.reader(fh))


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_extract_single_file(dataset_dir):
    wav = dataset_dir / "alice" / "0_alice_0.wav"
    result = runner.invoke(app, ["extract", str(wav)])
    assert result.exit_code == 0, result.output
    out = dataset_dir / "alice" / "0_alice_0.tmfwc.csv"
    assert _header(out) == [f"ch{i}" for i in range(1, 11)]


def test_extract_dataset_directory(dataset_dir, tmp_path):
    out = tmp_path / "features"
    args = ["extract", str(dataset_dir), "--extractor", "dwt", "--format", "bin"]
    result = runner.invoke(app, [*args, "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(list(out.glob("*.dwt.bin"))) == 12
    assert (out / "resolved_config.json").is_file()


def test_flags_beat_config_file(dataset_dir, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("mfcc:\n  num_ceps: 8\n", encoding="utf-8")
    wav = dataset_dir / "bob" / "1_bob_2.wav"
    args = ["extract", str(wav), "--extractor", "mfcc", "--config", str(cfg)]
    assert runner.invoke(app, args).exit_code == 0
    assert len(_header(dataset_dir / "bob" / "1_bob_2.mfcc.csv")) == 8
    assert runner.invoke(app, [*args, "--num-ceps", "5"]).exit_code == 0
    assert len(_header(dataset_dir / "bob" / "1_bob_2.mfcc.csv")) == 5


def test_extract_missing_input(tmp_path):
    result = runner.invoke(app, ["extract", str(tmp_path / "nope.wav")])
    assert result.exit_code == 1


def test_extract_non_finite_wav_exits_3(tmp_path):
    wav = tmp_path / "nan.wav"
    wavfile.write(wav, 8000, np.full(400, np.nan, dtype=np.float32))
    result = runner.invoke(app, ["extract", str(wav)])
    assert result.exit_code == 3


def test_invalid_config_value_exits_2(dataset_dir):
    wav = dataset_dir / "alice" / "0_alice_0.wav"
    result = runner.invoke(app, ["extract", str(wav), "--set", "tmfwc.kernel_ms=-1"])
    assert result.exit_code == 2


def test_unknown_flag_exits_2():
    assert runner.invoke(app, ["extract", "--frobnicate"]).exit_code == 2


def test_synth_kernels(tmp_path):
    out = tmp_path / "kernels"
    result = runner.invoke(app, ["synth-kernels", "--out", str(out)])
    assert result.exit_code == 0, result.output
    channels = sorted(out.glob("channel_*.csv"))
    assert len(channels) == 10
    lines = channels[0].read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,real,imag"
    assert len(lines) == 201
    assert _header(out / "response.csv")[0] == "freq_hz"
    assert (out / "components.csv").is_file()


def test_synth_kernels_with_published_table(tmp_path):
    out = tmp_path / "kernels"
    result = runner.invoke(app, ["synth-kernels", "--table", "table1.csv", "--out", str(out)])
    assert result.exit_code == 0, result.output
    with (out / "components.csv").open(encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["channel"] == "1"]
    assert [float(r["freq_hz"]) for r in rows][:2] == [131.0, 141.0]


def test_train_then_report(dataset_dir, tmp_path):
    run = tmp_path / "run"
    result = runner.invoke(
        app,
        [
            "train",
            str(dataset_dir),
            "--seeds",
            "2",
            "--train-frac",
            "0.5",
            "--set",
            "reservoir.n_nodes=30",
            "--out",
            str(run),
        ],
    )
    assert result.exit_code == 0, result.output
    for name in ("model.json", "results.json", "resolved_config.json", "run.json"):
        assert (run / name).is_file()
    assert json.loads((run / "run.json").read_text(encoding="utf-8"))["seeds"] == [42, 43]

    report = tmp_path / "report"
    result = runner.invoke(app, ["report", str(run), "--out", str(report)])
    assert result.exit_code == 0, result.output
    lines = (report / "accuracy.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 2 * 2
    assert (report / "resolved_config.json").is_file()

    evaluated = tmp_path / "eval"
    result = runner.invoke(
        app, ["eval", str(dataset_dir), "--model", str(run / "model.json"), "--out", str(evaluated)]
    )
    assert result.exit_code == 0, result.output
    assert (evaluated / "summary.json").is_file()


def _train_and_eval(dataset_dir, root, *config_args):
    run = root / "run"
    args = ["train", str(dataset_dir), *config_args, "--seeds", "2", "--no-cache"]
    result = runner.invoke(app, [*args, "--set", "reservoir.n_nodes=30", "--out", str(run)])
    assert result.exit_code == 0, result.output
    evaluated = root / "eval"
    args = ["eval", str(dataset_dir), "--model", str(run / "model.json"), "--no-cache"]
    result = runner.invoke(app, [*args, "--out", str(evaluated)])
    assert result.exit_code == 0, result.output
    return run, evaluated / "accuracy.csv"


def test_repeated_runs_write_identical_accuracy(dataset_dir, tmp_path):
    first_run, first = _train_and_eval(dataset_dir, tmp_path / "first")
    resolved = str(first_run / "resolved_config.json")
    _, second = _train_and_eval(dataset_dir, tmp_path / "second", "--config", resolved)
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text(encoding="utf-8").splitlines()) == 1 + 2 * 2


def test_eval_with_mismatched_extractor(dataset_dir, tmp_path):
    run = tmp_path / "run"
    args = ["train", str(dataset_dir), "--seeds", "1", "--set", "reservoir.n_nodes=20"]
    assert runner.invoke(app, [*args, "--out", str(run)]).exit_code == 0
    result = runner.invoke(
        app,
        ["eval", str(dataset_dir), "--model", str(run / "model.json"), "--extractor", "mfcc"],
    )
    assert result.exit_code == 2


def test_bench_writes_timing(tmp_path):
    data = build_dataset(tmp_path / "small", takes=1)
    out = tmp_path / "bench"
    result = runner.invoke(
        app, ["bench", str(data), "--repetitions", "1", "--warmups", "0", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    with (out / "timing.csv").open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["extractor"] for r in rows] == ["tmfwc", "mfcc", "dwt"]
    assert float(rows[0]["transforms_per_utterance"]) == 0.0


def test_report_on_missing_run(tmp_path):
    assert runner.invoke(app, ["report", str(tmp_path / "nothing")]).exit_code == 1
