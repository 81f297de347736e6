from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from app.services.reports import build_document, parse_document, render_csv, render_json, render_text
from models import EvaluationRecord, OutputFormat, VerificationReport

logger = logging.getLogger(__name__)


def render(
    output_format: OutputFormat,
    config_echo: Mapping[str, Any],
    reports: Sequence[VerificationReport] = (),
    evaluations: Sequence[EvaluationRecord] = (),
    timing: Optional[Mapping[str, Any]] = None,
) -> str:
    """Render a run in the requested output format."""
    if output_format is OutputFormat.CSV:
        return render_csv(reports)
    if output_format is OutputFormat.TEXT:
        return render_text(reports, evaluations)
    return render_json(build_document(config_echo, reports, evaluations, timing))


def save_output(path: Union[str, Path], text: str) -> Path:
    """Write rendered output, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("Wrote %s bytes to %s", len(text), target)
    return target


def load_reports(path: Union[str, Path]) -> list[VerificationReport]:
    """Read the verification reports of a saved JSON document."""
    _, reports = parse_document(Path(path).read_text(encoding="utf-8"))
    return reports
