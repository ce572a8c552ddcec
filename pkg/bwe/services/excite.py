import logging
import math
from typing import Callable, Dict, Optional

import numpy as np

from bwe.core.exceptions import ContractError
from bwe.schemas.audio import CANONICAL_STFT, ComplexSpectrogram, Signal, StftConfig
from bwe.schemas.features import EPSILON, CoarseSpectrum, GroupingMatrix
from bwe.schemas.records import DegradationRecord, ExciterKind, ExciterVariant
from bwe.services.degrade import highpass
from bwe.services.features import default_grouping
from bwe.services.spectral import istft, stft

logger = logging.getLogger(__name__)


def passband_bins(record: DegradationRecord, config: StftConfig = CANONICAL_STFT) -> tuple:
    """First and last STFT bin whose centre lies inside [f_lo, f_hi]."""
    lo = int(math.ceil(record.f_lo / config.bin_hz - 1e-9))
    return lo, config.bin_of(record.f_hi)


def passband_level(
    spec: ComplexSpectrogram,
    record: DegradationRecord,
    g: Optional[GroupingMatrix] = None,
) -> np.ndarray:
    """
    Per-frame mean bin magnitude of the two highest coarse bands lying fully
    inside the passband, floored at eps so silent frames still get excitation.
    """
    g = g or default_grouping()
    lo, hi = passband_bins(record, spec.config)
    inside = [b for b in range(g.n_bands) if g.band_edges[b] >= lo and g.band_edges[b + 1] - 1 <= hi]
    if not inside:
        raise ContractError(f"Passband {record.f_lo}-{record.f_hi} Hz holds no complete coarse band")

    top = inside[-2:]
    bins = np.concatenate([np.arange(g.band_edges[b], g.band_edges[b + 1]) for b in top])
    level = np.abs(spec.frames[:, bins]).mean(axis=1)
    return np.maximum(level, EPSILON)


def _noise_exciter(signal: Signal, kind: ExciterKind, record: DegradationRecord) -> Signal:
    config = CANONICAL_STFT
    _, hi = passband_bins(record, config)

    rng = np.random.default_rng(kind.seed)
    noise = stft(Signal(rng.standard_normal(len(signal)), signal.sample_rate), config)
    frames = noise.frames.copy()
    frames[:, :hi + 1] = 0.0

    if kind.flat_level is not None:
        level = np.full(frames.shape[0], kind.flat_level)
    else:
        level = passband_level(stft(signal, config), record)

    upper = frames[:, hi + 1:]
    rms = np.sqrt(np.mean(np.abs(upper) ** 2, axis=1))
    scale = level / np.maximum(rms, np.finfo(np.float64).tiny)
    frames[:, hi + 1:] = upper * scale[:, None]

    return istft(ComplexSpectrogram(frames, config, len(signal)))


def _modulation(n_frames: int, offset: int, config: StftConfig) -> np.ndarray:
    """
    Per-frame factor that keeps content moved by `offset` bins phase-coherent
    across overlapping frames (frames are referenced to their first sample).
    """
    t = np.arange(n_frames)
    return (-1.0) ** offset * np.exp(2j * np.pi * offset * config.hop * t / config.fft_size)


def _fold_exciter(signal: Signal, kind: ExciterKind, record: DegradationRecord) -> Signal:
    config = CANONICAL_STFT
    spec = stft(signal, config)
    lo, hi = passband_bins(record, config)
    source = spec.frames[:, lo:hi + 1]
    width = source.shape[1]

    frames = np.zeros_like(spec.frames)
    start = hi + 1
    block = 0
    while start < config.n_bins:
        count = min(width, config.n_bins - start)
        if block % 2 == 0:
            # mirror about the block's lower edge: bin start + i takes bin hi - i
            axis = start + hi
            frames[:, start:start + count] = (
                np.conj(source[:, ::-1][:, :count]) * _modulation(spec.n_frames, axis, config)[:, None]
            )
        else:
            shift = start - lo
            frames[:, start:start + count] = source[:, :count] * _modulation(spec.n_frames, shift, config)[:, None]
        start += count
        block += 1

    return istft(ComplexSpectrogram(frames, config, len(signal)))


def _rect_exciter(signal: Signal, kind: ExciterKind, record: DegradationRecord) -> Signal:
    return signal.with_samples(np.abs(signal.samples))


_EXCITERS: Dict[ExciterVariant, Callable[[Signal, ExciterKind, DegradationRecord], Signal]] = {
    ExciterVariant.NOISE: _noise_exciter,
    ExciterVariant.FOLD: _fold_exciter,
    ExciterVariant.RECT: _rect_exciter,
}


def excite(signal: Signal, kind: ExciterKind, record: DegradationRecord) -> Signal:
    """
    Broadens the upsampled input above f_hi. Each variant produces a wideband
    signal that is highpassed strictly above f_hi and added to the input, so
    the input's passband comes through untouched.
    """
    signal.require_rate(CANONICAL_STFT.sample_rate, "excite")
    try:
        generator = _EXCITERS[ExciterVariant(kind.variant)]
    except (KeyError, ValueError) as e:
        raise ContractError(f"Unknown exciter variant {kind.variant!r}") from e

    if len(signal) == 0:
        return signal

    generated = generator(signal, kind, record)
    upper = highpass(generated, record.f_hi, include_cutoff=False)
    logger.debug(f"{kind.variant.value} exciter added {np.sqrt(np.mean(upper.samples ** 2)):.3e} rms above {record.f_hi:.1f} Hz")
    return signal.with_samples(signal.samples + upper.samples)


def flatness(coarse: CoarseSpectrum, k: int) -> np.ndarray:
    """Per-frame max - min of the log10 coarse bands >= k; 0 means perfectly flat."""
    if k < 0 or k >= coarse.band_count:
        raise ContractError(f"Band index {k} outside 0..{coarse.band_count - 1}")
    upper = coarse.frames[:, k:]
    if upper.shape[0] == 0:
        return np.zeros(0)
    return upper.max(axis=1) - upper.min(axis=1)
