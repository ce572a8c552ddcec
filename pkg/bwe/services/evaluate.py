import logging
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pystoi.stoi import stoi as pystoi_stoi
from scipy.signal import welch

from bwe.core.config import resolve_workers
from bwe.core.exceptions import BweError, ContractError
from bwe.core.observability import LatencyTracker
from bwe.schemas.audio import WIDEBAND_RATE, Signal
from bwe.schemas.features import GroupingMatrix
from bwe.schemas.records import DegradationRecord
from bwe.schemas.reports import CorpusSummary, MetricReport
from bwe.services.degrade import read_manifest
from bwe.services.features import coarse_features, default_grouping, log_mel_features
from bwe.services.predict import feature_loss
from bwe.services.signal_io import read_wav

logger = logging.getLogger(__name__)

SILENT_DB = -200.0
STOI_MIN_SECONDS = 0.384
WELCH_SEGMENT = 8192

# warnings.catch_warnings swaps process-wide state
_STOI_LOCK = threading.Lock()


def _aligned(reference: Signal, estimate: Signal, operation: str) -> Tuple[np.ndarray, np.ndarray]:
    reference.require_rate(WIDEBAND_RATE, operation)
    estimate.require_rate(WIDEBAND_RATE, operation)
    if len(reference) == 0 or len(estimate) == 0:
        raise ContractError(f"{operation} needs non-empty signals")
    length = max(len(reference), len(estimate))
    return reference.fit_length(length).samples, estimate.fit_length(length).samples


def mel_l1(reference: Signal, estimate: Signal) -> float:
    """Mean absolute difference of 80-band log10 mel spectrograms; the shorter signal is zero-padded."""
    ref, est = _aligned(reference, estimate, "mel_l1")
    ref_mel = log_mel_features(Signal(ref, WIDEBAND_RATE)).frames
    est_mel = log_mel_features(Signal(est, WIDEBAND_RATE)).frames
    return float(np.mean(np.abs(ref_mel - est_mel)))


def stoi(reference: Signal, estimate: Signal) -> float:
    """
    Short-time objective intelligibility of `estimate` against `reference`
    (10 kHz internal rate, 15 third-octave bands from 150 Hz, 384 ms segments,
    frames 40 dB below the reference peak removed first).
    """
    ref, est = _aligned(reference, estimate, "stoi")
    if len(ref) < STOI_MIN_SECONDS * WIDEBAND_RATE:
        raise ContractError(f"stoi needs at least {STOI_MIN_SECONDS * 1000:.0f} ms of audio, got {len(ref) / WIDEBAND_RATE * 1000:.0f} ms")

    with _STOI_LOCK, warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        score = pystoi_stoi(ref, est, WIDEBAND_RATE, extended=False)

    if any("Not enough STFT frames" in str(w.message) for w in caught):
        raise ContractError("stoi needs at least 384 ms of non-silent audio after silence removal")
    return float(score)


def band_energy_db(signal: Signal, f_low: float, f_high: float) -> float:
    """
    10 log10 of the energy in [f_low, f_high] over the total energy, from a
    Hann-windowed Welch estimate. Silent input reports -200 dB.
    """
    nyquist = signal.sample_rate / 2
    if f_low < 0 or f_low >= f_high or f_high > nyquist:
        raise ContractError(f"Band [{f_low}, {f_high}] Hz must satisfy 0 <= f_low < f_high <= {nyquist}")
    n = len(signal)
    if n == 0:
        return SILENT_DB

    segment = min(WELCH_SEGMENT, n)
    freqs, power = welch(
        signal.samples,
        fs=signal.sample_rate,
        window="hann",
        nperseg=segment,
        noverlap=segment // 2,
        detrend=False,
        scaling="spectrum",
    )
    total = float(np.sum(power))
    if total <= 0.0:
        return SILENT_DB
    band = float(np.sum(power[(freqs >= f_low) & (freqs <= f_high)]))
    if band <= 0.0:
        return SILENT_DB
    return float(10.0 * np.log10(band / total))


def evaluate_utterance(
    reference: Signal,
    estimate: Signal,
    record: DegradationRecord,
    g: Optional[GroupingMatrix] = None,
) -> MetricReport:
    g = g or default_grouping()
    tracker = LatencyTracker()
    ref, est = _aligned(reference, estimate, "evaluate")
    ref_signal, est_signal = Signal(ref, WIDEBAND_RATE), Signal(est, WIDEBAND_RATE)

    with tracker.measure(f"metrics_{record.utterance_id}"):
        coarse_loss = feature_loss(
            coarse_features(ref_signal, g), coarse_features(est_signal, g), record.cutoff_band_k
        )
        report = MetricReport(
            utterance_id=record.utterance_id,
            mel_l1=mel_l1(ref_signal, est_signal),
            stoi=stoi(ref_signal, est_signal),
            coarse_loss_hi=coarse_loss,
            upper_band_energy_db=band_energy_db(est_signal, g.band_lower_hz(record.cutoff_band_k), WIDEBAND_RATE / 2),
        )
    return report


def _evaluate_one(record: DegradationRecord, estimates_dir: Path, references_dir: Path, g: GroupingMatrix) -> MetricReport:
    try:
        reference = read_wav(references_dir / f"{record.utterance_id}.wav")
        estimate = read_wav(estimates_dir / f"{record.utterance_id}.wav")
        return evaluate_utterance(reference, estimate, record, g)
    except (BweError, OSError) as e:
        logger.error(f"Failed to evaluate {record.utterance_id}: {str(e)}")
        return MetricReport(utterance_id=record.utterance_id, error=str(e))


def evaluate_corpus(
    manifest: Union[str, Path],
    estimates_dir: Union[str, Path],
    references_dir: Union[str, Path],
    workers: int = 0,
    g: Optional[GroupingMatrix] = None,
) -> Tuple[List[MetricReport], CorpusSummary]:
    """
    Scores every manifest utterance. Unreadable or missing files become error
    entries; the summary averages only the successful ones.
    """
    g = g or default_grouping()
    records = read_manifest(manifest)
    estimates_dir, references_dir = Path(estimates_dir), Path(references_dir)

    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        reports = list(pool.map(lambda r: _evaluate_one(r, estimates_dir, references_dir, g), records))

    reports.sort(key=lambda r: r.utterance_id)
    summary = summarize(reports)
    logger.info(f"Evaluated {summary.count} utterances ({summary.error_count} failed)")
    return reports, summary


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(reports: Sequence[MetricReport]) -> CorpusSummary:
    ok = [r for r in reports if r.ok]
    failed = sorted(r.utterance_id for r in reports if not r.ok)
    return CorpusSummary(
        count=len(ok),
        error_count=len(failed),
        failed_ids=failed,
        mel_l1_mean=_mean([r.mel_l1 for r in ok]),
        stoi_mean=_mean([r.stoi for r in ok]),
        coarse_loss_hi_mean=_mean([r.coarse_loss_hi for r in ok]),
        upper_band_energy_db_mean=_mean([r.upper_band_energy_db for r in ok]),
    )
