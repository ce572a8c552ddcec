import csv
import json
from pathlib import Path
from typing import Optional, Sequence, Union

from fpdf import FPDF

from bwe.core.config import settings
from bwe.schemas.reports import CorpusSummary, MetricReport

PathLike = Union[str, Path]

CSV_FIELDS = [
    "utterance_id",
    "mel_l1",
    "stoi",
    "coarse_loss_hi",
    "upper_band_energy_db",
    "clap",
    "deep_feature_loss",
    "error",
]


def _fmt(value: Optional[float], digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _latin1(text: str) -> str:
    # core PDF fonts only cover latin-1
    return text.encode("latin-1", "replace").decode("latin-1")


class ReportExporter:
    """
    Exports per-utterance metric reports and the corpus summary.
    Supports machine-readable JSON lines / CSV and a human-readable PDF.
    """

    @staticmethod
    def to_jsonl(reports: Sequence[MetricReport], summary: CorpusSummary, output_path: PathLike):
        """One report per line, ordered by utterance id, followed by a {"summary": ...} line."""
        with open(output_path, "w", encoding="utf-8", newline="\n") as f:
            for report in sorted(reports, key=lambda r: r.utterance_id):
                f.write(report.model_dump_json() + "\n")
            f.write(json.dumps({"summary": summary.model_dump()}, sort_keys=True) + "\n")

    @staticmethod
    def to_csv(reports: Sequence[MetricReport], output_path: PathLike):
        with open(output_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
            writer.writeheader()
            for report in sorted(reports, key=lambda r: r.utterance_id):
                row = report.model_dump()
                writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_FIELDS})

    @classmethod
    def to_pdf(
        cls,
        reports: Sequence[MetricReport],
        summary: CorpusSummary,
        output_path: PathLike,
        fingerprint: Optional[str] = None,
    ):
        """Generates a human-friendly evaluation report in PDF format."""
        pdf = FPDF()
        pdf.add_page()

        # Header
        pdf.set_font("helvetica", "B", 16)
        pdf.cell(0, 10, _latin1(f"{settings.PROJECT_NAME} - Evaluation Report"), ln=True, align="C")
        pdf.set_font("helvetica", "", 10)
        pdf.cell(0, 6, f"Engine version {settings.ENGINE_VERSION}", ln=True, align="C")
        pdf.ln(8)

        # Corpus summary
        pdf.set_font("helvetica", "B", 12)
        pdf.cell(0, 8, "1. Corpus Summary", ln=True)
        pdf.set_font("helvetica", "", 10)
        pdf.cell(0, 6, f"Utterances evaluated: {summary.count}", ln=True)
        pdf.cell(0, 6, f"Mean log-mel L1: {_fmt(summary.mel_l1_mean)}", ln=True)
        pdf.cell(0, 6, f"Mean STOI: {_fmt(summary.stoi_mean)}", ln=True)
        pdf.cell(0, 6, f"Mean high-band feature loss: {_fmt(summary.coarse_loss_hi_mean)}", ln=True)
        pdf.cell(0, 6, f"Mean upper-band energy: {_fmt(summary.upper_band_energy_db_mean, 1)} dB", ln=True)

        if summary.error_count:
            pdf.set_text_color(255, 0, 0)
            pdf.set_font("helvetica", "B", 10)
            pdf.cell(0, 6, f"FAILED: {summary.error_count} utterance(s)", ln=True)
            pdf.set_text_color(0, 0, 0)
        pdf.ln(6)

        # Per-utterance table
        pdf.set_font("helvetica", "B", 12)
        pdf.cell(0, 8, "2. Per-Utterance Metrics", ln=True)
        widths = (60, 30, 30, 35, 35)
        pdf.set_font("helvetica", "B", 9)
        pdf.set_fill_color(240, 240, 240)
        for width, title in zip(widths, ("Utterance", "Mel L1", "STOI", "High-band loss", "Upper band dB")):
            pdf.cell(width, 6, title, border=1, fill=True)
        pdf.ln()

        pdf.set_font("helvetica", "", 9)
        for report in sorted(reports, key=lambda r: r.utterance_id):
            if report.ok:
                cells = (
                    report.utterance_id,
                    _fmt(report.mel_l1),
                    _fmt(report.stoi),
                    _fmt(report.coarse_loss_hi),
                    _fmt(report.upper_band_energy_db, 1),
                )
                for width, text in zip(widths, cells):
                    pdf.cell(width, 6, _latin1(text[:40]), border=1)
                pdf.ln()
            else:
                pdf.set_text_color(255, 0, 0)
                pdf.multi_cell(0, 6, _latin1(f"{report.utterance_id}: {report.error}"), border=1)
                pdf.set_text_color(0, 0, 0)
            if pdf.get_y() > 270:
                pdf.add_page()

        if fingerprint:
            pdf.set_y(-15)
            pdf.set_font("helvetica", "I", 8)
            pdf.cell(0, 10, f"Run fingerprint: {fingerprint}", align="C")

        pdf.output(str(output_path))
