from __future__ import annotations

import json

import pytest

from tmfwc_bench.core.config import (
    CONFIG_FILE_NAME,
    RESOLVED_CONFIG_NAME,
    AppConfig,
    apply_overrides,
    build_config,
    config_to_json,
    deep_merge,
    load_config,
    parse_assignment,
    read_config_file,
    resolve_config_source,
    write_resolved_config,
)
from tmfwc_bench.core.presets import PRESETS_ENV, list_presets
from tmfwc_bench.errors import ConfigInvalid, IoFailure
from tmfwc_bench.extractors import ExtractorName


def test_defaults_without_any_file():
    cfg = load_config()
    assert cfg == AppConfig()
    assert cfg.tmfwc.num_channels == 10
    assert cfg.filterbank.num_filters == 25
    assert cfg.mfcc.num_ceps == 13
    assert cfg.reservoir.n_nodes == 200
    assert cfg.readout.ridge_lambda == 1e-6
    assert cfg.bench.repetitions == 20
    assert cfg.bench.warmups == 3


@pytest.mark.parametrize(
    ("name", "text"),
    [
        ("c.yaml", "mfcc:\n  num_ceps: 8\n"),
        ("c.toml", "[mfcc]\nnum_ceps = 8\n"),
        ("c.json", '{"mfcc": {"num_ceps": 8}}'),
    ],
)
def test_config_formats(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    assert load_config(str(path)).mfcc.num_ceps == 8


def test_overrides_beat_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("mfcc:\n  num_ceps: 8\n", encoding="utf-8")
    cfg = load_config(str(path), {"mfcc.num_ceps": 13, "reservoir.seed": None})
    assert cfg.mfcc.num_ceps == 13
    assert cfg.reservoir.seed == 42


def test_discovers_config_in_working_directory(tmp_path):
    (tmp_path / CONFIG_FILE_NAME).write_text("[reservoir]\nn_nodes = 64\n", encoding="utf-8")
    assert resolve_config_source(None) == tmp_path / CONFIG_FILE_NAME
    assert load_config().reservoir.n_nodes == 64


def test_presets_are_found():
    assert {"quick", "table1", "fsdd-mfcc"} <= set(list_presets())
    cfg = load_config("table1")
    assert cfg.tmfwc.f_min_hz == 121.0
    assert cfg.tmfwc.table == "table1.csv"


def test_presets_env_dir_wins(tmp_path, monkeypatch):
    presets = tmp_path / "mine"
    presets.mkdir()
    (presets / "quick.yaml").write_text("reservoir:\n  n_nodes: 7\n", encoding="utf-8")
    monkeypatch.setenv(PRESETS_ENV, str(presets))
    assert load_config("quick").reservoir.n_nodes == 7


def test_unknown_config_reference():
    with pytest.raises(IoFailure):
        load_config("definitely-not-a-preset")


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("mfcc:\n  num_cepz: 8\n", encoding="utf-8")
    with pytest.raises(ConfigInvalid):
        load_config(str(path))


@pytest.mark.parametrize(
    "data",
    [
        {"experiment": {"split": {"train_frac": 1.5}}},
        {"experiment": {"n_reservoir_seeds": 0}},
        {"reservoir": {"spectral_radius": 1.2}},
        {"filterbank": {"f_max_hz": 5000.0}},
        {"filterbank": {"fft_size": 1000}},
        {"experiment": {"extractor": "lpc"}},
        {"signal": {"frame_ms": 10.0, "hop_ms": 20.0}},
    ],
)
def test_invalid_values(data):
    with pytest.raises(ConfigInvalid):
        build_config(data)


def test_bad_syntax_and_format(tmp_path):
    bad = tmp_path / "c.toml"
    bad.write_text("[mfcc\n", encoding="utf-8")
    with pytest.raises(ConfigInvalid):
        read_config_file(bad)
    ini = tmp_path / "c.ini"
    ini.write_text("[mfcc]\n", encoding="utf-8")
    with pytest.raises(ConfigInvalid):
        read_config_file(ini)


def test_parse_assignment():
    assert parse_assignment("mfcc.num_ceps=8") == ("mfcc.num_ceps", 8)
    assert parse_assignment("experiment.control=true") == ("experiment.control", True)
    assert parse_assignment("tmfwc.table=table1.csv") == ("tmfwc.table", "table1.csv")
    assert parse_assignment("readout.ridge_lambda=1.0e-3") == ("readout.ridge_lambda", 1e-3)
    with pytest.raises(ConfigInvalid):
        parse_assignment("mfcc.num_ceps")


def test_merge_and_dotted_overrides():
    base = {"a": {"b": 1, "c": {"d": 2}}}
    assert deep_merge(base, {"a": {"c": {"e": 3}}}) == {"a": {"b": 1, "c": {"d": 2, "e": 3}}}
    assert apply_overrides(base, {"a.c.d": 5, "x.y": 1}) == {
        "a": {"b": 1, "c": {"d": 5}},
        "x": {"y": 1},
    }
    assert base == {"a": {"b": 1, "c": {"d": 2}}}


def test_resolved_config_reproduces_the_run(tmp_path):
    cfg = load_config(None, {"experiment.extractor": "mfcc", "mfcc.num_ceps": 9})
    path = write_resolved_config(cfg, tmp_path / "run")
    assert path.name == RESOLVED_CONFIG_NAME
    assert json.loads(path.read_text(encoding="utf-8"))["mfcc"]["num_ceps"] == 9
    again = load_config(str(path))
    assert again == cfg
    assert again.experiment.extractor is ExtractorName.MFCC
    assert config_to_json(again) == config_to_json(cfg)


def test_reservoir_seeds_count_up_from_base():
    cfg = build_config({"reservoir": {"seed": 100}, "experiment": {"n_reservoir_seeds": 3}})
    assert cfg.reservoir_seeds() == [100, 101, 102]
