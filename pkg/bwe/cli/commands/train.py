import argparse
import logging
from pathlib import Path

from bwe.cli.common import common_options, require, run_config
from bwe.core.exceptions import ContractError
from bwe.services.batch import collect_feature_pairs
from bwe.services.predict import (
    bias_only_model,
    corpus_losses,
    save_model,
    split_train_validation,
    sweep_ridge,
    train_ridge,
)
from bwe.services.run_snapshotter import RunSnapshotter

logger = logging.getLogger(__name__)

NAME = "train-predictor"


def register(subparsers):
    parser = subparsers.add_parser(
        NAME,
        parents=[common_options()],
        help="Fit the ridge envelope predictor on a degraded corpus",
    )
    parser.add_argument("--manifest", default=None, help="manifest.jsonl written by degrade")
    parser.add_argument("--references", dest="references_dir", default=None, help="Wideband WAVs named <id>.wav")
    parser.add_argument("--out", dest="model_out", default=None, help="Model file to write (BWELTV01)")
    parser.add_argument("--context", type=int, default=None, help="Context radius c (2c+1 frames)")
    parser.add_argument("--ridge", type=float, default=None, help="Ridge parameter lambda")
    parser.add_argument("--sweep", action="store_true", default=None, help="Select lambda on the validation split")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(args, NAME, ("manifest", "references_dir", "model_out", "context", "ridge", "sweep"))
    require(config, "manifest", "references_dir", "model_out")

    pairs, result = collect_feature_pairs(config.manifest, config.references_dir, config.workers)
    if not pairs:
        raise ContractError("No usable training utterances")

    train_ids, validation_ids = split_train_validation([p.record.utterance_id for p in pairs])
    train_pairs = [p for p in pairs if p.record.utterance_id in set(train_ids)]
    validation_pairs = [p for p in pairs if p.record.utterance_id in set(validation_ids)]
    logger.info(f"Split {len(pairs)} utterances into {len(train_pairs)} train / {len(validation_pairs)} validation")

    if config.sweep and validation_pairs:
        model, entries = sweep_ridge(train_pairs, validation_pairs, config.context)
        sweep_path = Path(f"{config.model_out}.sweep.jsonl")
        with open(sweep_path, "w", encoding="utf-8", newline="\n") as f:
            for entry in entries:
                f.write(entry.model_dump_json() + "\n")
    else:
        if config.sweep:
            logger.warning("Too few utterances for a validation split; training with the configured lambda")
        model = train_ridge(train_pairs, config.context, config.ridge)

    Path(config.model_out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, config.model_out)
    RunSnapshotter.write_lock(Path(config.model_out).parent, NAME, config)

    baseline = bias_only_model(train_pairs, config.context)
    for label, subset in (("train", train_pairs), ("validation", validation_pairs)):
        if not subset:
            continue
        l1, squared = corpus_losses(model, subset)
        bias_l1, _ = corpus_losses(baseline, subset)
        print(f"{label}: L1 {l1:.4f} (bias-only {bias_l1:.4f}), squared {squared:.4f}")

    print(f"wrote {config.model_out} (lambda={model.ridge:g}, c={model.context})")
    return 0 if result.ok else 1
