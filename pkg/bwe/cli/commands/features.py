import argparse

from bwe.cli.common import common_options, require, run_config
from bwe.services.batch import dump_features
from bwe.services.run_snapshotter import RunSnapshotter

NAME = "features"


def register(subparsers):
    parser = subparsers.add_parser(
        NAME,
        parents=[common_options()],
        help="Dump 64-band coarse features (and optionally log-mel / magnitude spectrograms) for every WAV",
    )
    parser.add_argument("--input", dest="input_dir", default=None)
    parser.add_argument("--output", dest="output_dir", default=None)
    parser.add_argument("--format", dest="feature_format", choices=["binary", "csv"], default=None)
    parser.add_argument("--mel", action="store_true", help="Also dump 80-band log-mel features")
    parser.add_argument("--spectrogram", action="store_true", help="Also dump BWESPEC1 magnitude spectrograms")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(args, NAME, ("input_dir", "output_dir", "feature_format"))
    require(config, "input_dir", "output_dir")

    result = dump_features(
        config.input_dir,
        config.output_dir,
        config.feature_format,
        include_mel=args.mel,
        include_spectrogram=args.spectrogram,
        workers=config.workers,
    )
    RunSnapshotter.write_lock(config.output_dir, NAME, config)
    print(f"dumped features for {len(result.processed)} file(s), {len(result.failed)} failed")
    return 0 if result.ok else 1
