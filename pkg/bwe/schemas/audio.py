from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import get_window

from bwe.core.exceptions import ContractError
from bwe.schemas.records import LtvMode

NARROWBAND_RATE = 8000
WIDEBAND_RATE = 48000
PIPELINE_RATES = (NARROWBAND_RATE, WIDEBAND_RATE)


@lru_cache(maxsize=8)
def _hann(length: int) -> np.ndarray:
    # DFT-even Hann: w[n] == w[length - n], centred on sample length // 2
    window = get_window("hann", length, fftbins=True).astype(np.float64)
    window.setflags(write=False)
    return window


@dataclass(frozen=True)
class Signal:
    """Mono audio: float64 samples plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ContractError(f"Signal must be mono, got array of shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ContractError("Signal samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ContractError(f"Sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def require_rate(self, rate: int, operation: str = "operation") -> "Signal":
        if self.sample_rate != rate:
            raise ContractError(f"{operation} expects a {rate} Hz signal, got {self.sample_rate} Hz")
        return self

    def with_samples(self, samples: np.ndarray) -> "Signal":
        return Signal(samples, self.sample_rate)

    def fit_length(self, length: int) -> "Signal":
        """Zero-pads or truncates to `length` samples."""
        if length <= len(self):
            return Signal(self.samples[:length], self.sample_rate)
        return Signal(np.pad(self.samples, (0, length - len(self))), self.sample_rate)


@dataclass(frozen=True)
class StftConfig:
    """STFT geometry: 2048-point Hann frames every 512 samples at 48 kHz (93.75 frames/s)."""

    fft_size: int = 2048
    hop: int = 512
    sample_rate: int = WIDEBAND_RATE

    def __post_init__(self):
        if self.hop <= 0 or self.fft_size % self.hop != 0:
            raise ContractError("fft_size must be a positive multiple of hop")
        if self.fft_size // self.hop != 4:
            raise ContractError("STFT frames must overlap by 75%")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def window(self) -> np.ndarray:
        return _hann(self.fft_size)

    def frame_count(self, length: int) -> int:
        """Centre-aligned framing: ceil((length + fft_size) / hop), zero for empty input."""
        if length < 1:
            return 0
        return -(-(length + self.fft_size) // self.hop)

    def bin_of(self, frequency_hz: float) -> int:
        """Index of the last bin whose centre frequency is <= frequency_hz."""
        return int(np.floor(frequency_hz / self.bin_hz + 1e-9))


CANONICAL_STFT = StftConfig()


@dataclass(frozen=True)
class ComplexSpectrogram:
    frames: np.ndarray  # T x B complex128
    config: StftConfig = CANONICAL_STFT
    length: int = 0  # samples of the analysed signal

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    frames: np.ndarray  # T x B, non-negative
    config: StftConfig = CANONICAL_STFT

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ContractError(f"Magnitude spectrogram must be 2-D, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)) or np.any(frames < 0):
            raise ContractError("Magnitudes must be finite and non-negative")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.frames.shape[1])


@dataclass(frozen=True)
class LtvResponse:
    """Per-frame, per-bin non-negative magnitude response driving the LTV filter."""

    frames: np.ndarray
    mode: LtvMode = LtvMode.MATCH
    config: StftConfig = field(default=CANONICAL_STFT)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or not np.all(np.isfinite(frames)) or np.any(frames < 0):
            raise ContractError("LTV response must be a finite, non-negative T x B matrix")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "mode", LtvMode(self.mode))
