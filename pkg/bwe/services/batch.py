import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Tuple, TypeVar, Union

from bwe.core.config import resolve_workers
from bwe.core.exceptions import BweError, ConfigError
from bwe.schemas.audio import NARROWBAND_RATE, WIDEBAND_RATE
from bwe.schemas.features import FeaturePair, GroupingMatrix
from bwe.schemas.records import DegradationRecord
from bwe.schemas.reports import BatchResult
from bwe.services.degrade import degrade_to_8k, read_manifest, sample_record, utterance_seed, write_manifest
from bwe.services.features import coarse_features, default_grouping, log_mel_features, save_features
from bwe.services.pipeline import ExtensionPipeline, build_feature_pair
from bwe.services.signal_io import read_wav, require_pipeline_rate, upsample_6x, write_wav
from bwe.services.spectral import magnitude, save_spectrogram, stft

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")

MANIFEST_NAME = "manifest.jsonl"


def list_wavs(directory: PathLike) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"Input directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == ".wav")


def _map_utterances(
    items: Iterable[T],
    key: Callable[[T], str],
    task: Callable[[T], object],
    workers: int,
) -> Tuple[BatchResult, List[object]]:
    """
    Runs `task` over items on a thread pool. A failing item is logged and
    recorded; the others carry on. Results come back in input order.
    """
    items = list(items)

    def guarded(item: T):
        try:
            return True, task(item)
        except (BweError, OSError) as e:
            logger.error(f"Failed to process {key(item)}: {str(e)}")
            return False, str(e)

    with ThreadPoolExecutor(max_workers=resolve_workers(workers)) as pool:
        outcomes = list(pool.map(guarded, items))

    result = BatchResult()
    values = []
    for item, (ok, value) in zip(items, outcomes):
        if ok:
            result.processed.append(key(item))
            values.append(value)
        else:
            result.failed[key(item)] = value
    return result, values


def degrade_corpus(
    input_dir: PathLike,
    output_dir: PathLike,
    global_seed: int,
    workers: int = 0,
    subtype: str = "FLOAT",
) -> Tuple[BatchResult, List[DegradationRecord]]:
    """
    Bandlimits every 48 kHz WAV in input_dir with a randomly drawn passband and
    writes the 8 kHz result plus a manifest of the passbands to output_dir.
    """
    wavs = list_wavs(input_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if not wavs:
        logger.warning(f"No WAV files found in {input_dir}")

    def degrade_one(path: Path) -> DegradationRecord:
        record = sample_record(utterance_seed(global_seed, path.stem), path.stem)
        signal = read_wav(path).require_rate(WIDEBAND_RATE, f"degrade ({path.name})")
        write_wav(degrade_to_8k(signal, record), output_dir / f"{path.stem}.wav", subtype)
        return record

    result, records = _map_utterances(wavs, lambda p: p.stem, degrade_one, workers)
    write_manifest(records, output_dir / MANIFEST_NAME)
    logger.info(f"Degraded {len(result.processed)} utterances into {output_dir} ({len(result.failed)} failed)")
    return result, records


def extend_corpus(
    pipeline: ExtensionPipeline,
    manifest: PathLike,
    input_dir: PathLike,
    output_dir: PathLike,
    references_dir: Optional[PathLike] = None,
    workers: int = 0,
    subtype: str = "FLOAT",
) -> BatchResult:
    """Runs the extension pipeline for every manifest entry; outputs are named <id>.wav."""
    if pipeline.needs_reference and references_dir is None:
        raise ConfigError("The oracle predictor needs --references")
    records = read_manifest(manifest)
    input_dir, output_dir = Path(input_dir), Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    def extend_one(record: DegradationRecord) -> None:
        narrowband = read_wav(input_dir / f"{record.utterance_id}.wav")
        reference = None
        if pipeline.needs_reference:
            reference = read_wav(Path(references_dir) / f"{record.utterance_id}.wav")
        extended = pipeline.extend(narrowband, record, reference)
        write_wav(extended, output_dir / f"{record.utterance_id}.wav", subtype)

    result, _ = _map_utterances(records, lambda r: r.utterance_id, extend_one, workers)
    logger.info(f"Extended {len(result.processed)} utterances into {output_dir} ({len(result.failed)} failed)")
    return result


def collect_feature_pairs(
    manifest: PathLike,
    references_dir: PathLike,
    workers: int = 0,
    g: Optional[GroupingMatrix] = None,
) -> Tuple[List[FeaturePair], BatchResult]:
    """Rebuilds (input, target) coarse features for every manifest entry from the wideband references."""
    g = g or default_grouping()
    records = read_manifest(manifest)
    references_dir = Path(references_dir)

    def pair_for(record: DegradationRecord) -> FeaturePair:
        reference = read_wav(references_dir / f"{record.utterance_id}.wav")
        return build_feature_pair(reference, record, g)

    result, pairs = _map_utterances(records, lambda r: r.utterance_id, pair_for, workers)
    return pairs, result


def dump_features(
    input_dir: PathLike,
    output_dir: PathLike,
    fmt: str = "binary",
    include_mel: bool = False,
    include_spectrogram: bool = False,
    workers: int = 0,
    g: Optional[GroupingMatrix] = None,
) -> BatchResult:
    """
    Writes <id>.coarse.{bin,csv} for every WAV (8 kHz input is upsampled
    first), optionally with <id>.mel.* and a <id>.spec.bin magnitude dump.
    """
    g = g or default_grouping()
    wavs = list_wavs(input_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    extension = "csv" if fmt == "csv" else "bin"

    def dump_one(path: Path) -> None:
        signal = require_pipeline_rate(read_wav(path))
        if signal.sample_rate == NARROWBAND_RATE:
            signal = upsample_6x(signal)
        save_features(coarse_features(signal, g).frames, output_dir / f"{path.stem}.coarse.{extension}", fmt)
        if include_mel:
            save_features(log_mel_features(signal).frames, output_dir / f"{path.stem}.mel.{extension}", fmt)
        if include_spectrogram:
            save_spectrogram(magnitude(stft(signal)), output_dir / f"{path.stem}.spec.bin")

    result, _ = _map_utterances(wavs, lambda p: p.stem, dump_one, workers)
    logger.info(f"Dumped features for {len(result.processed)} files into {output_dir}")
    return result
