import argparse
import logging

from bwe.cli.common import common_options, require, run_config
from bwe.services.batch import degrade_corpus
from bwe.services.run_snapshotter import RunSnapshotter

logger = logging.getLogger(__name__)

NAME = "degrade"


def register(subparsers):
    parser = subparsers.add_parser(
        NAME,
        parents=[common_options()],
        help="Bandlimit a 48 kHz corpus to randomized passbands and write 8 kHz WAVs plus a manifest",
    )
    parser.add_argument("--input", dest="input_dir", help="Directory of 48 kHz WAV files")
    parser.add_argument("--output", dest="output_dir", help="Directory for 8 kHz WAVs and manifest.jsonl")
    parser.add_argument("--seed", dest="global_seed", type=int, default=None)
    parser.add_argument("--wav-subtype", choices=["FLOAT", "PCM_16"], default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(args, NAME, ("input_dir", "output_dir", "global_seed", "wav_subtype"))
    require(config, "input_dir", "output_dir")

    result, _ = degrade_corpus(
        config.input_dir, config.output_dir, config.global_seed, config.workers, config.wav_subtype
    )
    RunSnapshotter.write_lock(config.output_dir, NAME, config)

    print(f"degraded {len(result.processed)} file(s), {len(result.failed)} failed")
    for utterance_id, error in sorted(result.failed.items()):
        print(f"  {utterance_id}: {error}")
    return 0 if result.ok else 1
