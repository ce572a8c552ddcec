import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np
import scipy.fft
from pydantic import ValidationError

from bwe.core.exceptions import ContractError, FormatError
from bwe.schemas.audio import NARROWBAND_RATE, WIDEBAND_RATE, Signal
from bwe.schemas.records import HIGH_CUTOFF_RANGE, LOW_CUTOFF_RANGE, DegradationRecord

logger = logging.getLogger(__name__)

DECIMATION_FACTOR = WIDEBAND_RATE // NARROWBAND_RATE


def _bin_frequencies(n: int, sample_rate: int) -> np.ndarray:
    return scipy.fft.rfftfreq(n, d=1.0 / sample_rate)


def bandlimit(signal: Signal, f_lo: float, f_hi: float) -> Signal:
    """
    Frequency-domain brickwall over the whole signal: rfft, zero every bin
    strictly below f_lo or strictly above f_hi, irfft at the original length.
    The operator is an orthogonal projection, so it is linear and idempotent.
    """
    signal.require_rate(WIDEBAND_RATE, "bandlimit")
    if f_lo >= f_hi:
        raise ContractError(f"Lower cutoff {f_lo} Hz must be below upper cutoff {f_hi} Hz")
    if f_lo < 0 or f_hi > signal.sample_rate / 2:
        raise ContractError(f"Cutoffs ({f_lo}, {f_hi}) Hz fall outside 0 .. Nyquist")

    n = len(signal)
    if n == 0:
        return signal

    spectrum = scipy.fft.rfft(signal.samples)
    freqs = _bin_frequencies(n, signal.sample_rate)
    spectrum[(freqs < f_lo) | (freqs > f_hi)] = 0.0
    return signal.with_samples(scipy.fft.irfft(spectrum, n=n))


def highpass(signal: Signal, cutoff_hz: float, include_cutoff: bool = True) -> Signal:
    """
    Exact FFT highpass. Keeps bins at or above cutoff_hz, or strictly above it
    when include_cutoff is False.
    """
    n = len(signal)
    if n == 0:
        return signal
    spectrum = scipy.fft.rfft(signal.samples)
    freqs = _bin_frequencies(n, signal.sample_rate)
    stop = freqs < cutoff_hz if include_cutoff else freqs <= cutoff_hz
    spectrum[stop] = 0.0
    return signal.with_samples(scipy.fft.irfft(spectrum, n=n))


def degrade_to_8k(signal: Signal, record: DegradationRecord) -> Signal:
    """Brickwall to the record's passband, then keep every 6th sample (ceil(n / 6) samples)."""
    limited = bandlimit(signal, record.f_lo, record.f_hi)
    return Signal(limited.samples[::DECIMATION_FACTOR], NARROWBAND_RATE)


def utterance_seed(global_seed: int, utterance_id: str) -> int:
    """Per-utterance u64 seed, independent of processing order and worker count."""
    digest = hashlib.sha256(f"{global_seed}:{utterance_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def sample_record(rng_seed: int, utterance_id: str) -> DegradationRecord:
    """Draws f_lo ~ U[0, 500] Hz and then f_hi ~ U[3500, 4000] Hz from a generator seeded with rng_seed."""
    rng = np.random.default_rng(rng_seed)
    f_lo = float(rng.uniform(*LOW_CUTOFF_RANGE))
    f_hi = float(rng.uniform(*HIGH_CUTOFF_RANGE))
    return DegradationRecord(utterance_id=utterance_id, f_lo=f_lo, f_hi=f_hi, seed=rng_seed)


def write_manifest(records: Iterable[DegradationRecord], path: Union[str, Path]) -> None:
    """One JSON object per line, sorted by utterance id."""
    ordered = sorted(records, key=lambda r: r.utterance_id)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in ordered:
            f.write(record.to_json_line() + "\n")


def read_manifest(path: Union[str, Path]) -> List[DegradationRecord]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")

    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = DegradationRecord.model_validate_json(line)
            except ValidationError as e:
                raise FormatError(f"{path.name}:{line_no}: invalid degradation record: {e}") from e
            if record.utterance_id in seen:
                raise FormatError(f"{path.name}:{line_no}: duplicate utterance id {record.utterance_id}")
            seen.add(record.utterance_id)
            records.append(record)

    logger.debug(f"Loaded {len(records)} records from {path}")
    return sorted(records, key=lambda r: r.utterance_id)
