from __future__ import annotations

import shutil
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel

from tmfwc_bench.core.bench import benchmark_extraction
from tmfwc_bench.core.cache import FeatureCache
from tmfwc_bench.core.config import (
    RESOLVED_CONFIG_NAME,
    AppConfig,
    load_config,
    parse_assignment,
    write_resolved_config,
)
from tmfwc_bench.core.dataset import DatasetLayout, load_dataset
from tmfwc_bench.core.logs import configure_logging
from tmfwc_bench.core.report import emit_report, render_results
from tmfwc_bench.core.results import ResultTable, load_results, save_results
from tmfwc_bench.core.runner import (
    evaluate_model,
    extract_features,
    load_audio,
    prepare_run_dir,
    train_experiment,
    write_run_manifest,
)
from tmfwc_bench.dsp.features import FeatureMatrix, write_binary, write_csv
from tmfwc_bench.dsp.signal_io import load_wav
from tmfwc_bench.dsp.tmfwc import kernel_transfer, save_component_table
from tmfwc_bench.errors import EXIT_CONFIG, IoFailure, TmfwcError
from tmfwc_bench.extractors import ExtractorName, get_extractor
from tmfwc_bench.extractors.tmfwc import TmfwcExtractor
from tmfwc_bench.reservoir.readout import load_model, save_model

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Time-domain mel wavelet features vs MFCC/DWT on an echo-state reservoir.",
)
console = Console()
err_console = Console(stderr=True)

RESPONSE_POINTS = 513


class OutputFormat(StrEnum):
    CSV = "csv"
    BIN = "bin"


@contextmanager
def _exit_on_error() -> Iterator[None]:
    """Map library errors to stable exit codes: 1 I/O, 2 config, 3 data."""
    try:
        yield
    except TmfwcError as e:
        err_console.print(Panel(str(e), title=type(e).__name__, border_style="red"))
        raise typer.Exit(code=e.exit_code) from e
    except ValidationError as e:
        err_console.print(Panel(str(e), title="Invalid configuration", border_style="red"))
        raise typer.Exit(code=EXIT_CONFIG) from e


def _load(config: str | None, sets: list[str] | None, **flags: Any) -> AppConfig:
    """Config file, then `--set key=value` pairs, then explicit flags (highest precedence)."""
    overrides: dict[str, Any] = dict(parse_assignment(s) for s in sets or [])
    overrides.update({k.replace("__", "."): v for k, v in flags.items() if v is not None})
    return load_config(config, overrides)


def _cache(cfg: AppConfig, no_cache: bool) -> FeatureCache | None:
    return None if no_cache else FeatureCache.from_config(cfg.cache)


def _write_features(fm: FeatureMatrix, path: Path, fmt: OutputFormat) -> Path:
    return write_csv(fm, path) if fmt is OutputFormat.CSV else write_binary(fm, path)


ConfigOpt = typer.Option(
    None, "--config", help="Config file (.json/.toml/.yaml) or preset name."
)
SetOpt = typer.Option(None, "--set", help="Override any config key: section.key=value.")
ExtractorOpt = typer.Option(None, "--extractor", help="Feature extractor.")
LayoutOpt = typer.Option(None, "--layout", help="Dataset layout.")
TableOpt = typer.Option(None, "--table", help="Component table CSV (or shipped table name).")
NumCepsOpt = typer.Option(None, "--num-ceps", help="MFCC cepstral coefficients.")
ThreadsOpt = typer.Option(None, "--threads", min=1, help="Worker threads for extraction.")
NoCacheOpt = typer.Option(False, "--no-cache", help="Do not read or write the feature cache.")


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="-v info, -vv debug."),
) -> None:
    configure_logging(verbose, err_console)


@app.command()
def extract(
    input_path: Path = typer.Argument(..., metavar="INPUT", help="WAV file or dataset directory."),
    extractor: ExtractorName | None = ExtractorOpt,
    config: str | None = ConfigOpt,
    table: str | None = TableOpt,
    num_ceps: int | None = NumCepsOpt,
    layout: DatasetLayout | None = LayoutOpt,
    threads: int | None = ThreadsOpt,
    fmt: OutputFormat = typer.Option(OutputFormat.CSV, "--format", help="Feature file format."),
    out: Path | None = typer.Option(None, "--out", help="Output directory."),
    no_cache: bool = NoCacheOpt,
    sets: list[str] | None = SetOpt,
) -> None:
    """
    Write one feature file per utterance: <stem>.<extractor>.<csv|bin>.
    """
    with _exit_on_error():
        cfg = _load(
            config,
            sets,
            experiment__extractor=extractor,
            experiment__layout=layout,
            tmfwc__table=table,
            mfcc__num_ceps=num_ceps,
            execution__threads=threads,
        )
        ex = get_extractor(cfg.experiment.extractor, cfg)
        written: list[Path] = []
        if input_path.is_file():
            out_dir = out or input_path.parent
            fm = ex.extract(load_wav(input_path))
            name = f"{input_path.stem}.{ex.name}.{fmt.value}"
            written.append(_write_features(fm, out_dir / name, fmt))
        elif input_path.is_dir():
            out_dir = out or input_path / "features"
            data = load_dataset(input_path, cfg.experiment.layout)
            buffers = load_audio(data)
            fs = extract_features(
                data,
                buffers,
                get_extractor(cfg.experiment.extractor, cfg, threads=1),
                cache=_cache(cfg, no_cache),
                threads=cfg.execution.threads,
            )
            for u in data:
                name = f"{u.id}.{ex.name}.{fmt.value}"
                written.append(_write_features(fs.features[u.id], out_dir / name, fmt))
        else:
            raise IoFailure(f"Input not found: {input_path}")
        write_resolved_config(cfg, out_dir)

    console.print(f"[bold]extract[/bold] extractor={ex.name} files={len(written)} out={out_dir}")


@app.command("synth-kernels")
def synth_kernels(
    config: str | None = ConfigOpt,
    table: str | None = TableOpt,
    out: Path = typer.Option(Path("kernels"), "--out", help="Output directory."),
    sets: list[str] | None = SetOpt,
) -> None:
    """
    Dump the time-domain kernels (channel_XX.csv), their component table and magnitude response.
    """
    with _exit_on_error():
        cfg = _load(config, sets, tmfwc__table=table)
        ex = get_extractor(ExtractorName.TMFWC, cfg)
        assert isinstance(ex, TmfwcExtractor)
        kernels = ex.kernels
        try:
            out.mkdir(parents=True, exist_ok=True)
            for k in kernels:
                n = np.arange(k.kernel_len)
                rows = np.column_stack([n, k.real_kernel, k.imag_kernel])
                lines = ["n,real,imag"] + [f"{int(a)},{b!r},{c!r}" for a, b, c in rows.tolist()]
                path = out / f"channel_{k.channel_index:02d}.csv"
                path.write_text("\n".join(lines) + "\n", encoding="utf-8")

            freqs = np.linspace(0.0, ex.sample_rate_hz / 2, RESPONSE_POINTS)
            mags = np.column_stack([np.abs(kernel_transfer(k, freqs)) for k in kernels])
            header = ",".join(["freq_hz", *(f"ch{k.channel_index}" for k in kernels)])
            body = [
                ",".join([repr(float(f)), *(repr(float(v)) for v in row)])
                for f, row in zip(freqs, mags, strict=True)
            ]
            (out / "response.csv").write_text("\n".join([header, *body]) + "\n", encoding="utf-8")
        except OSError as e:
            raise IoFailure(f"Cannot write kernels to {out}: {e}") from e
        save_component_table(ex.table, out / "components.csv")
        write_resolved_config(cfg, out)

    console.print(
        f"[bold]synth-kernels[/bold] channels={len(kernels)} "
        f"kernel_len={kernels[0].kernel_len} out={out}"
    )


@app.command()
def train(
    dataset: Path = typer.Argument(..., help="Dataset directory (or manifest.csv)."),
    extractor: ExtractorName | None = ExtractorOpt,
    config: str | None = ConfigOpt,
    layout: DatasetLayout | None = LayoutOpt,
    table: str | None = TableOpt,
    num_ceps: int | None = NumCepsOpt,
    seeds: int | None = typer.Option(None, "--seeds", min=1, help="Number of reservoirs."),
    seed: int | None = typer.Option(None, "--seed", min=0, help="First reservoir seed."),
    train_frac: float | None = typer.Option(None, "--train-frac", help="Training fraction."),
    control: bool | None = typer.Option(
        None, "--control/--no-control", help="Add label-shuffled control tasks."
    ),
    threads: int | None = ThreadsOpt,
    out: Path | None = typer.Option(None, "--out", help="Run directory."),
    no_cache: bool = NoCacheOpt,
    sets: list[str] | None = SetOpt,
) -> None:
    """
    Train digit and speaker readouts on every reservoir seed; writes model.json and results.json.
    """
    with _exit_on_error():
        cfg = _load(
            config,
            sets,
            experiment__extractor=extractor,
            experiment__layout=layout,
            experiment__n_reservoir_seeds=seeds,
            experiment__split__train_frac=train_frac,
            experiment__control=control,
            reservoir__seed=seed,
            tmfwc__table=table,
            mfcc__num_ceps=num_ceps,
            execution__threads=threads,
        )
        data = load_dataset(dataset, cfg.experiment.layout)
        run_id, run_dir = prepare_run_dir(out)
        write_resolved_config(cfg, run_dir)
        write_run_manifest(
            run_dir,
            {
                "run_id": run_id,
                "command": "train",
                "dataset": str(dataset),
                "utterances": len(data),
                "extractor": cfg.experiment.extractor.value,
                "seeds": cfg.reservoir_seeds(),
            },
        )
        results, model = train_experiment(cfg, data, cache=_cache(cfg, no_cache))
        results = results.model_copy(update={"run_id": run_id})
        save_results(results, run_dir)
        save_model(model, run_dir / "model.json")

    render_results(results, console)
    console.print(f"{results.summary()} artifacts={run_dir}")


@app.command("eval")
def eval_cmd(
    dataset: Path = typer.Argument(..., help="Dataset directory (or manifest.csv)."),
    model_path: Path = typer.Option(..., "--model", help="model.json written by train."),
    extractor: ExtractorName | None = ExtractorOpt,
    config: str | None = ConfigOpt,
    layout: DatasetLayout | None = LayoutOpt,
    table: str | None = TableOpt,
    num_ceps: int | None = NumCepsOpt,
    train_frac: float | None = typer.Option(None, "--train-frac", help="Training fraction."),
    threads: int | None = ThreadsOpt,
    out: Path | None = typer.Option(None, "--out", help="Report directory."),
    no_cache: bool = NoCacheOpt,
    sets: list[str] | None = SetOpt,
) -> None:
    """
    Score a trained model on the test split; writes accuracy.csv, timing.csv, summary.json.

    Without --config the resolved_config.json next to the model is used.
    """
    with _exit_on_error():
        sibling = model_path.parent / RESOLVED_CONFIG_NAME
        if config is None and sibling.is_file():
            config = str(sibling)
        cfg = _load(
            config,
            sets,
            experiment__extractor=extractor,
            experiment__layout=layout,
            experiment__split__train_frac=train_frac,
            tmfwc__table=table,
            mfcc__num_ceps=num_ceps,
            execution__threads=threads,
        )
        model = load_model(model_path)
        data = load_dataset(dataset, cfg.experiment.layout)
        results = evaluate_model(cfg, model, data, cache=_cache(cfg, no_cache))
        run_id, run_dir = prepare_run_dir(out)
        results = results.model_copy(update={"run_id": run_id})
        write_resolved_config(cfg, run_dir)
        save_results(results, run_dir)
        emit_report(results, run_dir)

    render_results(results, console)
    console.print(f"{results.summary()} artifacts={run_dir}")


@app.command()
def bench(
    dataset: Path = typer.Argument(..., help="Dataset directory (or manifest.csv)."),
    config: str | None = ConfigOpt,
    layout: DatasetLayout | None = LayoutOpt,
    table: str | None = TableOpt,
    num_ceps: int | None = NumCepsOpt,
    repetitions: int | None = typer.Option(None, "--repetitions", min=1),
    warmups: int | None = typer.Option(None, "--warmups", min=0),
    fft: bool | None = typer.Option(
        None, "--fft/--no-fft", help="Add an FFT-convolution TMFWC row."
    ),
    limit: int | None = typer.Option(None, "--limit", min=1, help="Use the first N utterances."),
    out: Path | None = typer.Option(None, "--out", help="Report directory."),
    sets: list[str] | None = SetOpt,
) -> None:
    """
    Time tmfwc, mfcc and dwt extraction single-threaded; writes timing.csv with op counts.
    """
    with _exit_on_error():
        cfg = _load(
            config,
            sets,
            experiment__layout=layout,
            tmfwc__table=table,
            mfcc__num_ceps=num_ceps,
            bench__repetitions=repetitions,
            bench__warmups=warmups,
            bench__include_fft_convolution=fft,
            execution__threads=1,
        )
        data = load_dataset(dataset, cfg.experiment.layout)
        if limit:
            data = data[:limit]
        results = benchmark_extraction(data, cfg)
        run_id, run_dir = prepare_run_dir(out)
        results = results.model_copy(update={"run_id": run_id})
        write_resolved_config(cfg, run_dir)
        save_results(results, run_dir)
        emit_report(results, run_dir)

    render_results(results, console)
    console.print(f"{results.summary()} artifacts={run_dir}")


@app.command()
def report(
    run: Path = typer.Argument(..., help="Run directory or results.json."),
    out: Path | None = typer.Option(None, "--out", help="Report directory (default: the run)."),
) -> None:
    """
    Render results.json into accuracy.csv, timing.csv and summary.json.
    """
    with _exit_on_error():
        results: ResultTable = load_results(run)
        source_dir = run if run.is_dir() else run.parent
        out_dir = out or source_dir
        emit_report(results, out_dir)
        resolved = source_dir / RESOLVED_CONFIG_NAME
        if resolved.is_file() and out_dir.resolve() != source_dir.resolve():
            try:
                shutil.copyfile(resolved, out_dir / RESOLVED_CONFIG_NAME)
            except OSError as e:
                raise IoFailure(f"Cannot copy {resolved}: {e}") from e

    render_results(results, console)
    console.print(f"{results.summary()} report={out_dir}")


@app.command()
def version() -> None:
    from tmfwc_bench import __version__

    console.print(__version__)


if __name__ == "__main__":
    app()
