from pathlib import Path
from typing import List

import numpy as np
import pytest
import soundfile as sf

from bwe.schemas.audio import WIDEBAND_RATE, Signal
from bwe.schemas.records import DegradationRecord
from bwe.services.degrade import degrade_to_8k
from bwe.services.features import build_grouping_matrix
from bwe.services.signal_io import upsample_6x

FORMANTS_HZ = np.array([500.0, 1500.0, 2500.0, 3500.0, 6000.0, 10000.0])
FORMANT_WIDTHS_HZ = np.array([150.0, 200.0, 250.0, 300.0, 1500.0, 3000.0])


def synth_speech(seed: int, seconds: float = 1.2, rate: int = WIDEBAND_RATE) -> np.ndarray:
    """
    Voiced, speech-like test signal: a vibrato harmonic series up to 23 kHz
    shaped by randomly shifted formants, a little broadband aspiration noise
    and a syllabic amplitude envelope. Length is a multiple of 6, peak 0.5.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate / 6)) * 6
    t = np.arange(n) / rate

    f0 = rng.uniform(100.0, 200.0)
    vibrato = 1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(3.0, 6.0) * t)
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / rate
    formants = FORMANTS_HZ * rng.uniform(0.9, 1.1, FORMANTS_HZ.size)

    voiced = np.zeros(n)
    for h in range(1, int(23000.0 // (f0 * 1.03)) + 1):
        freq = h * f0
        shape = 0.05 + np.sum(np.exp(-0.5 * ((freq - formants) / FORMANT_WIDTHS_HZ) ** 2))
        voiced += h ** -0.5 * shape * np.sin(h * phase + rng.uniform(0, 2 * np.pi))

    aspiration = 0.003 * rng.standard_normal(n)
    envelope = 0.35 + 0.65 * np.sin(np.pi * rng.uniform(3.0, 5.0) * t) ** 2
    y = (voiced + aspiration) * envelope
    return 0.5 * y / np.max(np.abs(y))


def write_wav_corpus(directory: Path, ids: List[str], seconds: float = 1.0, seed_offset: int = 0) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for i, utterance_id in enumerate(ids):
        sf.write(str(directory / f"{utterance_id}.wav"), synth_speech(seed_offset + i, seconds), WIDEBAND_RATE, subtype="FLOAT")
    return directory


@pytest.fixture(scope="session")
def grouping():
    return build_grouping_matrix()


@pytest.fixture(scope="session")
def speech():
    return Signal(synth_speech(0), WIDEBAND_RATE)


@pytest.fixture
def record():
    return DegradationRecord(utterance_id="utt000", f_lo=120.0, f_hi=3700.0, seed=0)


@pytest.fixture
def upsampled_input(speech, record):
    """The pipeline's view of `speech`: degraded to 8 kHz and interpolated back to 48 kHz."""
    return upsample_6x(degrade_to_8k(speech, record))


@pytest.fixture
def wideband_dir(tmp_path):
    return write_wav_corpus(tmp_path / "wideband", [f"utt{i:03d}" for i in range(4)])
