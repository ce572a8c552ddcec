import logging
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf
from scipy.signal import firwin, kaiserord, upfirdn

from bwe.core.exceptions import ContractError, UnsupportedEncodingError, WavFormatError
from bwe.schemas.audio import NARROWBAND_RATE, PIPELINE_RATES, WIDEBAND_RATE, Signal

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

UPSAMPLE_FACTOR = WIDEBAND_RATE // NARROWBAND_RATE
READABLE_SUBTYPES = {"PCM_16", "PCM_24", "PCM_32", "FLOAT", "DOUBLE"}
WRITABLE_SUBTYPES = {"FLOAT", "PCM_16"}

# Interpolation lowpass: cutoff 4 kHz, transition 3.8-4.2 kHz at 48 kHz.
INTERP_CUTOFF_HZ = 4000.0
INTERP_TRANSITION_HZ = (3800.0, 4200.0)
INTERP_STOPBAND_DB = 90.0


def read_wav(path: PathLike) -> Signal:
    """
    Reads a RIFF/WAV file into a float64 Signal normalized to [-1, 1].
    Multi-channel files keep channel 0.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"WAV file not found: {path}")

    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise WavFormatError(f"Malformed WAV header in {path}: {e}") from e

    if info.format not in ("WAV", "WAVEX"):
        raise UnsupportedEncodingError(f"{path} is a {info.format} container, expected WAV")
    if info.subtype not in READABLE_SUBTYPES:
        raise UnsupportedEncodingError(f"{path} uses unsupported encoding {info.subtype}")

    try:
        data, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except RuntimeError as e:
        raise WavFormatError(f"Could not decode {path}: {e}") from e

    if data.shape[1] > 1:
        logger.warning(f"{path.name} has {data.shape[1]} channels; keeping channel 0")
    return Signal(data[:, 0], sample_rate)


def write_wav(signal: Signal, path: PathLike, subtype: str = "FLOAT") -> None:
    """
    Writes a mono WAV. FLOAT (32-bit) is the default; PCM_16 quantizes by
    rounding to the nearest of 2**16 levels so the round-trip error stays
    within half a quantization step.
    """
    if subtype not in WRITABLE_SUBTYPES:
        raise UnsupportedEncodingError(f"Cannot write WAV subtype {subtype}")

    if subtype == "PCM_16":
        data = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = signal.samples.astype(np.float32)

    try:
        sf.write(str(path), data, signal.sample_rate, subtype=subtype, format="WAV")
    except RuntimeError as e:
        raise OSError(f"Could not write {path}: {e}") from e


@lru_cache(maxsize=1)
def interpolation_filter() -> np.ndarray:
    """Odd-length Kaiser windowed-sinc lowpass at 48 kHz, unity DC gain."""
    width = (INTERP_TRANSITION_HZ[1] - INTERP_TRANSITION_HZ[0]) / (WIDEBAND_RATE / 2)
    numtaps, beta = kaiserord(INTERP_STOPBAND_DB, width)
    numtaps |= 1  # odd length keeps the group delay an integer
    taps = firwin(numtaps, INTERP_CUTOFF_HZ, window=("kaiser", beta), fs=WIDEBAND_RATE)
    taps.setflags(write=False)
    return taps


def upsample_6x(signal: Signal) -> Signal:
    """
    8 kHz -> 48 kHz by zero-stuffing and windowed-sinc interpolation.
    The filter's group delay is removed so output sample 6n lines up with input sample n.
    """
    signal.require_rate(NARROWBAND_RATE, "upsample_6x")
    n = len(signal)
    if n == 0:
        return Signal(np.zeros(0), WIDEBAND_RATE)

    taps = interpolation_filter()
    delay = (len(taps) - 1) // 2
    filtered = upfirdn(taps * UPSAMPLE_FACTOR, signal.samples, up=UPSAMPLE_FACTOR)
    return Signal(filtered[delay:delay + UPSAMPLE_FACTOR * n], WIDEBAND_RATE)


def decimate_6x(signal: Signal) -> Signal:
    """48 kHz -> 8 kHz: the same lowpass as anti-alias filter, then every 6th sample."""
    signal.require_rate(WIDEBAND_RATE, "decimate_6x")
    n = len(signal)
    if n == 0:
        return Signal(np.zeros(0), NARROWBAND_RATE)

    taps = interpolation_filter()
    delay = (len(taps) - 1) // 2
    filtered = upfirdn(taps, signal.samples)[delay:delay + n]
    return Signal(filtered[::UPSAMPLE_FACTOR], NARROWBAND_RATE)


def require_pipeline_rate(signal: Signal) -> Signal:
    if signal.sample_rate not in PIPELINE_RATES:
        raise ContractError(
            f"Pipeline entry points accept {' or '.join(map(str, PIPELINE_RATES))} Hz audio, got {signal.sample_rate} Hz"
        )
    return signal
