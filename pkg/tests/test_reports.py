import json

import pytest

from app.repositories import load_reports, render, save_output
from app.services.reports import (
    CSV_COLUMNS,
    SCHEMA_VERSION,
    ReportFormatError,
    build_document,
    parse_document,
    render_csv,
    render_json,
    render_text,
    report_from_dict,
    report_to_dict,
)
from models import EvaluationRecord, IdentityId, OutputFormat, VerificationReport


def _report(identity=IdentityId.SERIES_EVALUATION, field="Q", passed=True, **params):
    return VerificationReport(
        identity_id=identity,
        field_label=field,
        params={key: str(value) for key, value in params.items()} or {"m": "3"},
        lhs=("1.984126984126984126984e-3", "0.0e+0"),
        rhs=("1.984126984126984126984e-3", "0.0e+0"),
        abs_residual="1.2e-33",
        rel_residual="6.0e-31",
        tolerance="1.0e-27",
        passed=passed,
        terms_report=[{"series": "S(2pi)", "terms_used": "12"}],
        notes=["zeta_K(-5) = -1/252"] if passed else [],
    )


@pytest.fixture()
def reports():
    return [
        _report(IdentityId.SERIES_EVALUATION, "Q(sqrt5)", m=3),
        _report(IdentityId.LERCH_CLASSICAL, "Q", passed=False, m=1),
        _report(IdentityId.SERIES_EVALUATION, "Q", m=3),
    ]


def test_report_dict_layout():
    payload = report_to_dict(_report())
    assert payload["identity_id"] == "SeriesEvaluation"
    assert payload["lhs"] == {"re": "1.984126984126984126984e-3", "im": "0.0e+0"}
    assert report_from_dict(payload) == _report()


@pytest.mark.error
def test_report_from_dict_rejects_missing_fields():
    payload = report_to_dict(_report())
    del payload["rhs"]
    with pytest.raises(ReportFormatError, match="malformed"):
        report_from_dict(payload)
    with pytest.raises(ReportFormatError):
        report_from_dict({**report_to_dict(_report()), "identity_id": "Unknown"})


def test_document_orders_reports(reports):
    document = build_document({"command": "verify"}, reports)
    order = [(entry["identity_id"], entry["field"]) for entry in document["reports"]]
    assert order == [("LerchClassical", "Q"), ("SeriesEvaluation", "Q"), ("SeriesEvaluation", "Q(sqrt5)")]
    assert document["schema_version"] == SCHEMA_VERSION
    assert "timing" not in document
    assert build_document({}, timing={"total_seconds": 1.5})["timing"] == {"total_seconds": 1.5}


def test_json_document_reads_back(reports):
    text = render_json(build_document({"command": "verify"}, reports))
    assert text.endswith("\n")
    document, parsed = parse_document(text)
    assert document["config_echo"] == {"command": "verify"}
    assert sorted(parsed, key=VerificationReport.sort_key) == sorted(reports, key=VerificationReport.sort_key)


@pytest.mark.error
def test_parse_document_errors():
    with pytest.raises(ReportFormatError, match="not a JSON document"):
        parse_document("{")
    with pytest.raises(ReportFormatError, match="schema_version"):
        parse_document(json.dumps({"schema_version": 99, "reports": []}))


def test_csv_rendering(reports):
    lines = render_csv(reports).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("lerch-classical,Q,m=1,")
    assert lines[1].endswith(",False")
    assert len(lines) == 4


def test_text_rendering(reports):
    evaluation = EvaluationRecord(
        command="zeta",
        field_label="Q(sqrt5)",
        params={"s": "-1"},
        values={"value": {"re": "3.3e-2", "im": "0.0e+0"}, "rational": "1/30"},
    )
    lines = render_text(reports, [evaluation]).splitlines()
    assert lines[0].startswith("FAIL lerch-classical [Q] m=1 residual=1.2e-33")
    assert lines[1].startswith("PASS series-evaluation [Q] m=3")
    assert lines[2] == "  note: zeta_K(-5) = -1/252"
    assert lines[-1] == "zeta [Q(sqrt5)] s=-1: value=3.3e-2 + 0.0e+0i, rational=1/30"
    assert render_text() == ""


def test_render_and_save(tmp_path, reports):
    echo = {"command": "verify"}
    assert render(OutputFormat.CSV, echo, reports) == render_csv(reports)
    assert render(OutputFormat.TEXT, echo, reports).startswith("FAIL")
    path = save_output(tmp_path / "out" / "run.json", render(OutputFormat.JSON, echo, reports))
    assert path.exists()
    assert len(load_reports(path)) == 3
