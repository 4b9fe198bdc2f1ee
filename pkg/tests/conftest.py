from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from tmfwc_bench.dsp.signal_io import AudioBuffer, write_wav

SAMPLE_RATE = 8000

# Each class owns one tone centred on a different channel of the default 10-channel bank.
DIGIT_TONES_HZ = {0: 290.0, 1: 1279.0}
SPEAKER_TONES_HZ = {"alice": 700.0, "bob": 2627.0}


def tone(
    freq_hz: float,
    duration_s: float = 0.25,
    *,
    amplitude: float = 0.5,
    phase: float = 0.0,
    sample_rate_hz: int = SAMPLE_RATE,
) -> np.ndarray:
    t = np.arange(int(round(duration_s * sample_rate_hz))) / sample_rate_hz
    return amplitude * np.cos(2.0 * np.pi * freq_hz * t + phase)


def utterance_samples(digit: int, speaker: str, take: int) -> np.ndarray:
    # takes differ only in phase, so their envelopes (and summaries) nearly coincide
    phase = 0.7 * take
    return tone(DIGIT_TONES_HZ[digit], phase=phase) + tone(
        SPEAKER_TONES_HZ[speaker], amplitude=0.3, phase=2.0 * phase
    )


def build_dataset(
    root: Path,
    *,
    takes: int = 3,
    nested: bool = True,
    digits: tuple[int, ...] = (0, 1),
    speakers: tuple[str, ...] = ("alice", "bob"),
) -> Path:
    """AudioMNIST-style tree: <root>/<speaker>/<digit>_<speaker>_<take>.wav."""
    for speaker in speakers:
        folder = root / speaker if nested else root
        for digit in digits:
            for take in range(takes):
                samples = utterance_samples(digit, speaker, take)
                write_wav(
                    AudioBuffer(samples=samples, sample_rate_hz=SAMPLE_RATE),
                    folder / f"{digit}_{speaker}_{take}.wav",
                )
    return root


@pytest.fixture(autouse=True)
def _isolated_workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    # keeps default run/cache directories and ./tmfwc-bench.toml discovery inside tmp_path
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("TMFWC_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("TMFWC_PRESETS_DIR", raising=False)


@pytest.fixture
def make_buffer() -> Callable[..., AudioBuffer]:
    def _make(samples: np.ndarray, sample_rate_hz: int = SAMPLE_RATE) -> AudioBuffer:
        return AudioBuffer(samples=np.asarray(samples, np.float64), sample_rate_hz=sample_rate_hz)

    return _make


@pytest.fixture
def dataset_dir(tmp_path: Path) -> Path:
    return build_dataset(tmp_path / "audiomnist")
