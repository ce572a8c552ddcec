import argparse
import logging
from pathlib import Path

from bwe.cli.common import add_exciter_options, common_options, require, run_config
from bwe.core.exceptions import ConfigError
from bwe.schemas.records import DegradationRecord
from bwe.services.batch import extend_corpus
from bwe.services.degrade import read_manifest
from bwe.services.pipeline import ExtensionPipeline
from bwe.services.run_snapshotter import RunSnapshotter
from bwe.services.signal_io import read_wav, write_wav

logger = logging.getLogger(__name__)

NAME = "extend"
CONFIG_KEYS = (
    "input_dir",
    "output_dir",
    "manifest",
    "references_dir",
    "predictor",
    "exciter",
    "exciter_seed",
    "flat_level",
    "ltv_mode",
    "gain_ceiling_db",
    "variant",
    "wav_subtype",
)


def register(subparsers):
    parser = subparsers.add_parser(
        NAME,
        parents=[common_options()],
        help="Extend 8 kHz audio to 48 kHz with the exciter/LTV pipeline",
    )
    parser.add_argument("--input", dest="input_dir", help="Directory of 8 kHz WAVs named <id>.wav")
    parser.add_argument("--output", dest="output_dir", help="Directory for the extended 48 kHz WAVs")
    parser.add_argument("--manifest", default=None, help="manifest.jsonl written by degrade")
    parser.add_argument("--references", dest="references_dir", default=None, help="Wideband references (oracle predictor)")
    parser.add_argument("--predictor", default=None, help="'oracle' or a BWELTV01 model file")
    add_exciter_options(parser)
    parser.add_argument("--wav-subtype", choices=["FLOAT", "PCM_16"], default=None)
    parser.add_argument("--trace", action="store_true", help="Write stage timings and real-time factors to trace.json")

    single = parser.add_argument_group("single-file mode")
    single.add_argument("--in", dest="in_file", default=None, help="One 8 kHz WAV")
    single.add_argument("--out", dest="out_file", default=None, help="Where to write the extended WAV")
    single.add_argument("--reference", dest="reference_file", default=None, help="Wideband reference for the oracle")
    single.add_argument("--f-lo", type=float, default=None)
    single.add_argument("--f-hi", type=float, default=None)
    parser.set_defaults(handler=run)


def _single_record(args: argparse.Namespace, manifest) -> DegradationRecord:
    utterance_id = Path(args.in_file).stem
    if manifest:
        for record in read_manifest(manifest):
            if record.utterance_id == utterance_id:
                return record
        raise ConfigError(f"{utterance_id} is not listed in {manifest}")
    if args.f_lo is None or args.f_hi is None:
        raise ConfigError("Single-file mode needs --manifest or both --f-lo and --f-hi")
    try:
        return DegradationRecord(utterance_id=utterance_id, f_lo=args.f_lo, f_hi=args.f_hi)
    except ValueError as e:
        raise ConfigError(f"Invalid passband: {e}") from e


def _run_single(args: argparse.Namespace, pipeline: ExtensionPipeline) -> int:
    if not args.out_file:
        raise ConfigError("--in needs --out")
    record = _single_record(args, pipeline.config.manifest)
    if pipeline.needs_reference and not args.reference_file:
        raise ConfigError("The oracle predictor needs --reference in single-file mode")

    narrowband = read_wav(args.in_file)
    reference = read_wav(args.reference_file) if pipeline.needs_reference else None
    write_wav(pipeline.extend(narrowband, record, reference), args.out_file, pipeline.config.wav_subtype)
    print(f"extended {args.in_file} -> {args.out_file}")
    return 0


def run(args: argparse.Namespace) -> int:
    config = run_config(args, NAME, CONFIG_KEYS)
    pipeline = ExtensionPipeline(config)

    if args.in_file:
        return _run_single(args, pipeline)

    require(config, "input_dir", "output_dir", "manifest")
    result = extend_corpus(
        pipeline,
        config.manifest,
        config.input_dir,
        config.output_dir,
        config.references_dir,
        config.workers,
        config.wav_subtype,
    )
    RunSnapshotter.write_lock(config.output_dir, NAME, config)
    if args.trace:
        RunSnapshotter.write_trace(config.output_dir, pipeline.tracer)

    print(f"extended {len(result.processed)} file(s), {len(result.failed)} failed")
    for utterance_id, error in sorted(result.failed.items()):
        print(f"  {utterance_id}: {error}")
    return 0 if result.ok else 1
