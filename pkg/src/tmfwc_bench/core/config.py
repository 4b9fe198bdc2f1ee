from __future__ import annotations

import copy
import json
import tomllib
from collections.abc import Mapping
from enum import StrEnum
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from tmfwc_bench.core.dataset import DatasetLayout, SplitConfig
from tmfwc_bench.core.presets import find_preset, list_presets
from tmfwc_bench.dsp.mfcc import MelFilterbankSpec, MfccConfig
from tmfwc_bench.dsp.signal_io import FramingConfig
from tmfwc_bench.dsp.tmfwc import TmfwcConfig
from tmfwc_bench.dsp.wavelet import DwtConfig
from tmfwc_bench.errors import ConfigInvalid, IoFailure
from tmfwc_bench.extractors.base import ExtractorName
from tmfwc_bench.reservoir.esn import ReservoirParams

CONFIG_FILE_NAME = "tmfwc-bench.toml"
RESOLVED_CONFIG_NAME = "resolved_config.json"


def default_config_paths() -> list[Path]:
    return [
        Path.cwd() / CONFIG_FILE_NAME,
        Path.home() / ".config" / "tmfwc-bench" / CONFIG_FILE_NAME,
    ]


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ReadoutConfig(_Section):
    ridge_lambda: float = Field(default=1e-6, ge=0.0)


class ExperimentConfig(_Section):
    extractor: ExtractorName = ExtractorName.TMFWC
    layout: DatasetLayout = DatasetLayout.AUDIO_MNIST
    split: SplitConfig = SplitConfig()
    n_reservoir_seeds: int = Field(default=10, ge=1)
    # adds label-shuffled digit/speaker tasks
    control: bool = False


class BenchConfig(_Section):
    repetitions: int = Field(default=20, ge=1)
    warmups: int = Field(default=3, ge=0)
    include_fft_convolution: bool = False


class PreflightMode(StrEnum):
    """
    strict  -> any ERROR aborts the run before features are extracted
    lenient -> utterances with ERROR are skipped; others run
    """

    STRICT = "strict"
    LENIENT = "lenient"


class ExecutionConfig(_Section):
    threads: int = Field(default=1, ge=1)
    preflight: PreflightMode = PreflightMode.STRICT


class CacheConfig(_Section):
    enabled: bool = True
    dir: str = ".tmfwc-bench/cache"


class AppConfig(_Section):
    signal: FramingConfig = FramingConfig()
    filterbank: MelFilterbankSpec = MelFilterbankSpec()
    mfcc: MfccConfig = MfccConfig()
    tmfwc: TmfwcConfig = TmfwcConfig()
    dwt: DwtConfig = DwtConfig()
    reservoir: ReservoirParams = ReservoirParams()
    readout: ReadoutConfig = ReadoutConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    bench: BenchConfig = BenchConfig()
    execution: ExecutionConfig = ExecutionConfig()
    cache: CacheConfig = CacheConfig()

    def reservoir_seeds(self) -> list[int]:
        base = self.reservoir.seed
        return [base + i for i in range(self.experiment.n_reservoir_seeds)]


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a JSON, TOML or YAML config file into a plain dict (format chosen by suffix)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Cannot read config {path}: {e}") from e
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(text)
        elif suffix == ".toml":
            data = tomllib.loads(text)
        elif suffix in {".yaml", ".yml"}:
            data = yaml.safe_load(text) or {}
        else:
            raise ConfigInvalid(f"{path}: unknown config format (use .json, .toml or .yaml)")
    except (json.JSONDecodeError, tomllib.TOMLDecodeError, yaml.YAMLError) as e:
        raise ConfigInvalid(f"{path}: cannot parse config: {e}") from e
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: top level must be a mapping")
    return data


def resolve_config_source(ref: str | Path | None) -> Path | None:
    """
    Resolution order:
      1) Explicit path
      2) Named preset (presets/<ref>.yaml)
      3) ./tmfwc-bench.toml, then ~/.config/tmfwc-bench/tmfwc-bench.toml
    """
    if ref:
        path = Path(ref)
        if path.is_file():
            return path
        preset = find_preset(str(ref))
        if preset is not None:
            return preset
        available = ", ".join(list_presets()) or "none"
        raise IoFailure(
            f"Config not found: {ref}\n"
            f"Not a file and not a preset (available presets: {available}).\n"
            f"Fix: pass an existing .json/.toml/.yaml file or set TMFWC_PRESETS_DIR."
        )
    for p in default_config_paths():
        if p.is_file():
            return p
    return None


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_overrides(data: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Dotted keys (`mfcc.num_ceps`) set nested values; None values are ignored."""
    out = copy.deepcopy(dict(data))
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = out
        *parents, leaf = dotted.split(".")
        for part in parents:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[leaf] = value
    return out


def parse_assignment(text: str) -> tuple[str, Any]:
    """`key.path=value`, value parsed as a YAML scalar (numbers, booleans, null, strings)."""
    if "=" not in text:
        raise ConfigInvalid(f"Override {text!r} must look like section.key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigInvalid(f"Override {text!r} has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"Override {text!r}: {e}") from e
    return key, value


def build_config(data: Mapping[str, Any]) -> AppConfig:
    try:
        return AppConfig.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigInvalid(f"Invalid configuration:\n{e}") from e


def load_config(
    ref: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> AppConfig:
    """
    Defaults < config file < overrides. If no ref is given, uses the default search paths.
    """
    path = resolve_config_source(ref)
    data = read_config_file(path) if path else {}
    return build_config(apply_overrides(data, overrides or {}))


def config_to_json(cfg: AppConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def write_resolved_config(cfg: AppConfig, out_dir: str | Path) -> Path:
    path = Path(out_dir) / RESOLVED_CONFIG_NAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(config_to_json(cfg), encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return path
