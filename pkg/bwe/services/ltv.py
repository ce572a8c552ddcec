import logging
from typing import Optional

import numpy as np

from bwe.core.exceptions import ContractError
from bwe.schemas.audio import WIDEBAND_RATE, ComplexSpectrogram, LtvResponse, Signal
from bwe.schemas.features import CoarseSpectrum, GroupingMatrix
from bwe.schemas.records import DegradationRecord, LtvMode
from bwe.services.degrade import highpass
from bwe.services.features import compress, decompress, default_grouping
from bwe.services.spectral import istft, magnitude, stft

logger = logging.getLogger(__name__)

DEFAULT_GAIN_CEILING_DB = 40.0
MATCH_DELTA = 1e-8


def build_response(
    target: CoarseSpectrum,
    g: Optional[GroupingMatrix] = None,
    mode: LtvMode = LtvMode.MATCH,
) -> LtvResponse:
    """Expands the predicted coarse envelope to one non-negative magnitude per STFT bin."""
    g = g or default_grouping()
    if target.band_count != g.n_bands:
        raise ContractError(f"Target has {target.band_count} bands, expected {g.n_bands}")
    return LtvResponse(decompress(target, g).frames, mode, target.config)


def cutoff_hz(record: DegradationRecord, g: GroupingMatrix) -> float:
    """Lower edge of the first band the extension is responsible for (4125 Hz for k=11)."""
    return g.band_lower_hz(record.cutoff_band_k)


def apply_ltv(
    excited: Signal,
    response: LtvResponse,
    record: Optional[DegradationRecord] = None,
    g: Optional[GroupingMatrix] = None,
    gain_ceiling_db: float = DEFAULT_GAIN_CEILING_DB,
    delta: float = MATCH_DELTA,
) -> Signal:
    """
    Zero-phase LTV filter: every STFT frame of `excited` is multiplied by a real,
    non-negative gain per bin and resynthesized.

    In direct mode the response is the gain. In match mode the gain is the
    response divided by the excitation's own band envelope (plus delta),
    capped at gain_ceiling_db. With a record, bins below band k get zero gain
    and the output is highpassed at the band-k edge so the residual path owns
    the passband; without one the full band is filtered.
    """
    excited.require_rate(WIDEBAND_RATE, "apply_ltv")
    g = g or default_grouping()
    config = response.config

    spec = stft(excited, config)
    if spec.frames.shape != response.frames.shape:
        raise ContractError(
            f"LTV response has shape {response.frames.shape}, excitation STFT has {spec.frames.shape}"
        )

    if response.mode == LtvMode.DIRECT:
        gain = response.frames.copy()
    else:
        envelope = decompress(compress(magnitude(spec), g), g).frames
        gain = response.frames / (envelope + delta)
        ceiling = 10.0 ** (gain_ceiling_db / 20.0)
        clipped = int(np.count_nonzero(gain > ceiling))
        if clipped:
            logger.debug(f"Gain ceiling of {gain_ceiling_db} dB hit on {clipped} bins")
        np.minimum(gain, ceiling, out=gain)

    if record is not None:
        gain[:, :g.band_edges[record.cutoff_band_k]] = 0.0

    filtered = istft(ComplexSpectrogram(spec.frames * gain, config, spec.length))
    if record is not None:
        filtered = highpass(filtered, cutoff_hz(record, g))
    return filtered


def residual_mix(upsampled_input: Signal, filtered: Signal) -> Signal:
    """Adds the synthesized upper band back onto the upsampled input."""
    upsampled_input.require_rate(WIDEBAND_RATE, "residual_mix")
    filtered.require_rate(WIDEBAND_RATE, "residual_mix")
    if len(upsampled_input) != len(filtered):
        raise ContractError(f"Cannot mix signals of {len(upsampled_input)} and {len(filtered)} samples")
    return upsampled_input.with_samples(upsampled_input.samples + filtered.samples)
