"""Serialization of verification reports and evaluation records (JSON, CSV, text)."""

from __future__ import annotations

import io
import json
import logging
from typing import Any, Iterable, Mapping, Optional, Sequence

import pandas as pd

from models import EvaluationRecord, IdentityId, VerificationReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ["identity", "field", "params", "abs_residual", "rel_residual", "tolerance", "passed"]


class ReportFormatError(ValueError):
    """Raised when a stored report document cannot be read back."""


def _pair(value: tuple[str, str]) -> dict[str, str]:
    return {"re": value[0], "im": value[1]}


def report_to_dict(report: VerificationReport) -> dict[str, Any]:
    return {
        "identity_id": report.identity_id.value,
        "field": report.field_label,
        "params": dict(sorted(report.params.items())),
        "lhs": _pair(report.lhs),
        "rhs": _pair(report.rhs),
        "abs_residual": report.abs_residual,
        "rel_residual": report.rel_residual,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "terms_report": [dict(entry) for entry in report.terms_report],
        "notes": list(report.notes),
    }


def report_from_dict(payload: Mapping[str, Any]) -> VerificationReport:
    try:
        return VerificationReport(
            identity_id=IdentityId(payload["identity_id"]),
            field_label=str(payload["field"]),
            params={str(key): str(value) for key, value in payload["params"].items()},
            lhs=(payload["lhs"]["re"], payload["lhs"]["im"]),
            rhs=(payload["rhs"]["re"], payload["rhs"]["im"]),
            abs_residual=payload["abs_residual"],
            rel_residual=payload["rel_residual"],
            tolerance=payload["tolerance"],
            passed=bool(payload["passed"]),
            terms_report=[dict(entry) for entry in payload.get("terms_report", [])],
            notes=list(payload.get("notes", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportFormatError(f"malformed report entry: {exc}") from exc


def evaluation_to_dict(record: EvaluationRecord) -> dict[str, Any]:
    return {
        "command": record.command,
        "field": record.field_label,
        "params": dict(sorted(record.params.items())),
        "values": record.values,
        "notes": list(record.notes),
    }


def build_document(
    config_echo: Mapping[str, Any],
    reports: Sequence[VerificationReport] = (),
    evaluations: Sequence[EvaluationRecord] = (),
    timing: Optional[Mapping[str, Any]] = None,
) -> dict[str, Any]:
    """Top-level JSON document; reports are ordered by (identity, field, params)."""
    document: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "config_echo": dict(config_echo),
        "reports": [report_to_dict(report) for report in sorted(reports, key=VerificationReport.sort_key)],
        "evaluations": [evaluation_to_dict(record) for record in evaluations],
    }
    if timing is not None:
        document["timing"] = dict(timing)
    return document


def render_json(document: Mapping[str, Any]) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def parse_document(text: str) -> tuple[dict[str, Any], list[VerificationReport]]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"not a JSON document: {exc}") from exc
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ReportFormatError(f"unsupported schema_version {document.get('schema_version')!r}")
    return document, [report_from_dict(entry) for entry in document.get("reports", [])]


def _params_text(params: Mapping[str, str]) -> str:
    return ";".join(f"{key}={value}" for key, value in sorted(params.items()))


def reports_frame(reports: Iterable[VerificationReport]) -> pd.DataFrame:
    rows = [
        {
            "identity": report.identity_id.slug,
            "field": report.field_label,
            "params": _params_text(report.params),
            "abs_residual": report.abs_residual,
            "rel_residual": report.rel_residual,
            "tolerance": report.tolerance,
            "passed": report.passed,
        }
        for report in sorted(reports, key=VerificationReport.sort_key)
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def render_csv(reports: Iterable[VerificationReport]) -> str:
    buffer = io.StringIO()
    reports_frame(reports).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _value_text(value: Any) -> str:
    if isinstance(value, Mapping) and set(value) == {"re", "im"}:
        return f"{value['re']} + {value['im']}i"
    return str(value)


def render_text(
    reports: Sequence[VerificationReport] = (),
    evaluations: Sequence[EvaluationRecord] = (),
) -> str:
    lines = []
    for report in sorted(reports, key=VerificationReport.sort_key):
        status = "PASS" if report.passed else "FAIL"
        lines.append(
            f"{status} {report.identity_id.slug} [{report.field_label}] {_params_text(report.params)} "
            f"residual={report.abs_residual} tolerance={report.tolerance}"
        )
        lines.extend(f"  note: {note}" for note in report.notes)
    for record in evaluations:
        values = ", ".join(f"{key}={_value_text(value)}" for key, value in record.values.items())
        lines.append(f"{record.command} [{record.field_label}] {_params_text(record.params)}: {values}")
        lines.extend(f"  note: {note}" for note in record.notes)
    return "\n".join(lines) + ("\n" if lines else "")


__all__ = [
    "CSV_COLUMNS",
    "ReportFormatError",
    "SCHEMA_VERSION",
    "build_document",
    "evaluation_to_dict",
    "parse_document",
    "render_csv",
    "render_json",
    "render_text",
    "report_from_dict",
    "report_to_dict",
    "reports_frame",
]
