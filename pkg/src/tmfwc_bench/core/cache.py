from __future__ import annotations

import hashlib
import logging
import os
import threading
from pathlib import Path

from tmfwc_bench.core.config import CacheConfig
from tmfwc_bench.dsp.features import FeatureMatrix, read_binary, write_binary
from tmfwc_bench.errors import DimensionMismatch, IoFailure, MalformedContainer

log = logging.getLogger(__name__)

CACHE_ENV = "TMFWC_CACHE_DIR"


def resolve_cache_dir(cfg: CacheConfig) -> Path:
    env_dir = os.environ.get(CACHE_ENV, "").strip()
    return Path(env_dir) if env_dir else Path(cfg.dir)


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    try:
        with path.open("rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e
    return h.hexdigest()


class FeatureCache:
    """
    Binary FeatureMatrix dumps keyed by sha256(audio bytes) + extractor cache key.

    A disabled cache never reads or writes. Corrupt entries count as misses and are rewritten.
    """

    def __init__(self, root: Path, enabled: bool = True) -> None:
        self.root = Path(root)
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    @classmethod
    def from_config(cls, cfg: CacheConfig) -> FeatureCache:
        return cls(resolve_cache_dir(cfg), enabled=cfg.enabled)

    def key(self, audio_path: Path, extractor_key: str) -> str:
        return hashlib.sha256(f"{file_digest(audio_path)}:{extractor_key}".encode()).hexdigest()

    def _record(self, *, hit: bool) -> None:
        # extract_features calls get() from worker threads
        with self._lock:
            if hit:
                self.hits += 1
            else:
                self.misses += 1

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.bin"

    def get(self, key: str, column_names: tuple[str, ...]) -> FeatureMatrix | None:
        if not self.enabled:
            return None
        path = self._path(key)
        if not path.is_file():
            self._record(hit=False)
            log.debug("cache miss %s", key[:12])
            return None
        try:
            fm = read_binary(path, column_names)
        except (MalformedContainer, DimensionMismatch, IoFailure) as e:
            self._record(hit=False)
            log.debug("cache entry %s unreadable (%s); recomputing", key[:12], e)
            return None
        self._record(hit=True)
        log.debug("cache hit %s", key[:12])
        return fm

    def put(self, key: str, fm: FeatureMatrix) -> None:
        if not self.enabled:
            return
        path = self._path(key)
        tmp = path.with_suffix(f".{os.getpid()}-{threading.get_ident()}.tmp")
        write_binary(fm, tmp)
        try:
            os.replace(tmp, path)
        except OSError as e:
            raise IoFailure(f"Cannot write cache entry {path}: {e}") from e
