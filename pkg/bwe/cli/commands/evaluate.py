import argparse
import logging
from pathlib import Path

from bwe.cli.common import common_options, require, run_config
from bwe.services.evaluate import evaluate_corpus
from bwe.services.report_exporter import ReportExporter
from bwe.services.run_snapshotter import RunSnapshotter

logger = logging.getLogger(__name__)

NAME = "evaluate"
REPORT_NAME = "metrics.jsonl"
CSV_NAME = "metrics.csv"


def register(subparsers):
    parser = subparsers.add_parser(
        NAME,
        parents=[common_options()],
        help="Score extended audio against wideband references (log-mel L1, STOI, band energies)",
    )
    parser.add_argument("--manifest", default=None)
    parser.add_argument("--estimates", dest="estimates_dir", default=None)
    parser.add_argument("--references", dest="references_dir", default=None)
    parser.add_argument("--output", dest="output_dir", default=None, help="Directory for metrics.jsonl")
    parser.add_argument("--csv", action="store_true", help="Also write metrics.csv")
    parser.add_argument("--pdf", default=None, help="Also render a PDF report to this path")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(args, NAME, ("manifest", "estimates_dir", "references_dir", "output_dir"))
    require(config, "manifest", "estimates_dir", "references_dir", "output_dir")

    reports, summary = evaluate_corpus(config.manifest, config.estimates_dir, config.references_dir, config.workers)

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    ReportExporter.to_jsonl(reports, summary, output_dir / REPORT_NAME)
    if args.csv:
        ReportExporter.to_csv(reports, output_dir / CSV_NAME)
    RunSnapshotter.write_lock(output_dir, NAME, config)
    if args.pdf:
        fingerprint = RunSnapshotter.create_run_snapshot(NAME, config).fingerprint
        ReportExporter.to_pdf(reports, summary, args.pdf, fingerprint)

    print(summary.model_dump_json(indent=2))
    return 0 if summary.error_count == 0 else 1
