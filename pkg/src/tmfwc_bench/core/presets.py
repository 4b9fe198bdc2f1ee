from __future__ import annotations

import os
from pathlib import Path

PRESETS_ENV = "TMFWC_PRESETS_DIR"
PRESET_SUFFIXES = (".yaml", ".yml")


def _repo_presets_dir() -> Path | None:
    """
    Dev-friendly fallback: if running from a src/ layout,
    resolve <repo-root>/presets next to src/.
    """
    here = Path(__file__).resolve()
    # .../src/tmfwc_bench/core/presets.py
    # parents: 0=core,1=tmfwc_bench,2=src,3=repo-root
    p = here.parents[3] / "presets"
    return p if p.is_dir() else None


def preset_dirs() -> list[Path]:
    """
    Search order:
      1) Env TMFWC_PRESETS_DIR
      2) ./presets (CWD)
      3) <repo-root>/presets
    """
    dirs: list[Path] = []
    env_dir = os.environ.get(PRESETS_ENV, "").strip()
    if env_dir:
        dirs.append(Path(env_dir))
    dirs.append(Path.cwd() / "presets")
    repo = _repo_presets_dir()
    if repo is not None:
        dirs.append(repo)
    return dirs


def find_preset(name: str) -> Path | None:
    for base in preset_dirs():
        for suffix in PRESET_SUFFIXES:
            path = base / f"{name}{suffix}"
            if path.is_file():
                return path
    return None


def list_presets() -> list[str]:
    names: set[str] = set()
    for base in preset_dirs():
        if base.is_dir():
            names.update(p.stem for p in base.iterdir() if p.suffix in PRESET_SUFFIXES)
    return sorted(names)
