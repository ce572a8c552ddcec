import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view

from bwe.core.exceptions import ContractError, FormatError
from bwe.schemas.audio import CANONICAL_STFT, ComplexSpectrogram, MagnitudeSpectrogram, Signal, StftConfig

logger = logging.getLogger(__name__)

SPECTROGRAM_MAGIC = b"BWESPEC1"
_HEADER = struct.Struct("<8sII")


def stft(signal: Signal, config: StftConfig = CANONICAL_STFT) -> ComplexSpectrogram:
    """
    Centre-aligned STFT: fft_size/2 zeros are prepended so frame t is centred
    on sample t * hop, and the tail is zero-filled until the last frame fits.
    Produces ceil((len + fft_size) / hop) frames of fft_size/2 + 1 bins.
    """
    signal.require_rate(config.sample_rate, "stft")
    n = len(signal)
    n_frames = config.frame_count(n)
    if n_frames == 0:
        return ComplexSpectrogram(np.zeros((0, config.n_bins), dtype=np.complex128), config, 0)

    half = config.fft_size // 2
    padded = np.zeros((n_frames - 1) * config.hop + config.fft_size)
    padded[half:half + n] = signal.samples

    frames = sliding_window_view(padded, config.fft_size)[::config.hop]
    spectrum = scipy.fft.rfft(frames * config.window, axis=-1)
    return ComplexSpectrogram(spectrum.astype(np.complex128, copy=False), config, n)


def istft(spec: ComplexSpectrogram) -> Signal:
    """
    Weighted overlap-add inverse of `stft`: every frame is windowed again and
    the sum is divided by the accumulated squared window (1.5 in the interior).
    """
    config = spec.config
    frames = np.asarray(spec.frames)
    if frames.ndim != 2 or frames.shape[1] != config.n_bins:
        raise ContractError(f"Spectrogram frames must be T x {config.n_bins}, got {frames.shape}")

    n_frames = frames.shape[0]
    if n_frames == 0:
        return Signal(np.zeros(spec.length), config.sample_rate)

    window = config.window
    blocks = scipy.fft.irfft(frames, n=config.fft_size, axis=-1) * window

    total = (n_frames - 1) * config.hop + config.fft_size
    output = np.zeros(total)
    envelope = np.zeros(total)
    squared = window ** 2
    ratio = config.fft_size // config.hop
    # Frames phase, phase + ratio, ... tile the timeline without overlapping,
    # so each phase is one contiguous add in a fixed order.
    for phase in range(min(ratio, n_frames)):
        chunk = blocks[phase::ratio]
        start = phase * config.hop
        stop = start + chunk.size
        output[start:stop] += chunk.reshape(-1)
        envelope[start:stop] += np.tile(squared, chunk.shape[0])

    nonzero = envelope > 1e-10
    output[nonzero] /= envelope[nonzero]

    half = config.fft_size // 2
    length = spec.length if spec.length else total - config.fft_size
    samples = output[half:half + length]
    if samples.shape[0] < length:
        samples = np.pad(samples, (0, length - samples.shape[0]))
    return Signal(samples, config.sample_rate)


def magnitude(spec: ComplexSpectrogram) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(np.abs(spec.frames), spec.config)


def save_spectrogram(mag: MagnitudeSpectrogram, path: Union[str, Path]) -> None:
    """BWESPEC1 dump: magic, u32 T, u32 B, then float64 row-major, little-endian."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SPECTROGRAM_MAGIC, mag.n_frames, mag.n_bins))
        f.write(np.ascontiguousarray(mag.frames, dtype="<f8").tobytes())


def load_spectrogram(path: Union[str, Path], config: StftConfig = CANONICAL_STFT) -> MagnitudeSpectrogram:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"Truncated spectrogram header in {path}")
        magic, n_frames, n_bins = _HEADER.unpack(header)
        if magic != SPECTROGRAM_MAGIC:
            raise FormatError(f"{path} is not a BWESPEC1 file")
        payload = f.read()
    if len(payload) != n_frames * n_bins * 8:
        raise FormatError(f"{path} holds {len(payload)} payload bytes, expected {n_frames * n_bins * 8}")
    frames = np.frombuffer(payload, dtype="<f8").reshape(n_frames, n_bins).astype(np.float64)
    return MagnitudeSpectrogram(frames, config)
