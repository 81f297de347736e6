import pytest

from app.repositories.tables_repo import TableFormatError, ingest_table, write_table
from app.services.fields import ideal_count, ideal_counts, residue_H
from app.services.zeta import dedekind_zeta
from models import CoefficientSource

HEADER = "# degree=3\n# r1=1\n# r2=1\n# disc=-108\n"


def _table(tmp_path, body, header=HEADER, name="table.tsv"):
    path = tmp_path / name
    path.write_text(header + body, encoding="utf-8")
    return path


def test_ingest_cubic_table(cubic_table):
    field = ingest_table(cubic_table)
    assert field.coefficient_source is CoefficientSource.EXTERNAL_TABLE
    assert (field.degree_d, field.r1, field.r2) == (3, 1, 1)
    assert (field.disc_abs, field.disc_signed) == (108, -108)
    assert field.label == "Q(cbrt2)"
    assert field.table_length == 20000
    assert field.regulator_R.startswith("1.34737734")
    assert field.describe()["table_length"] == 20000


def test_cubic_counts_follow_splitting(cubic_table):
    field = ingest_table(cubic_table)
    assert ideal_count(field, 5) == 1
    assert ideal_count(field, 25) == 2
    assert ideal_count(field, 7) == 0
    assert ideal_count(field, 343) == 1
    assert ideal_count(field, 31) == 3
    assert ideal_count(field, 31 * 5) == 3


def test_write_then_ingest_keeps_counts(tmp_path, golden, ctx30):
    path = write_table(golden, tmp_path / "nested" / "qsqrt5.tsv", 5000)
    field = ingest_table(path)
    assert field.coefficients == tuple(ideal_counts(golden, 5000))
    assert field.label == golden.label
    assert (field.r1, field.r2, field.disc_signed) == (2, 0, 5)
    assert abs(residue_H(field, ctx30) - residue_H(golden, ctx30)) < 1e-25


def test_table_backed_zeta_matches_closed_form(tmp_path, golden, ctx):
    field = ingest_table(write_table(golden, tmp_path / "qsqrt5.tsv", 5000))
    assert abs(dedekind_zeta(field, 6, ctx) - dedekind_zeta(golden, 6, ctx)) < 10 * ctx.target()


def test_whitespace_rows_and_optional_headers(tmp_path):
    field = ingest_table(_table(tmp_path, "1 1\n2 0\n3   1\n", name="cubic.txt"))
    assert field.coefficients == (1, 0, 1)
    assert field.label == "cubic"
    assert field.class_number_h == 1
    assert field.roots_of_unity_w == 2


@pytest.mark.error
@pytest.mark.parametrize(
    ("body", "message", "line"),
    [
        ("1\t1\n3\t1\n", "expected index 2, found 3", 6),
        ("1\t1\n2\tx\n", "value is not an integer", 6),
        ("1\t1\n2\t1.5\n", "value is not an integer", 6),
        ("1\t1\n2\t-1\n", "nonnegative", 6),
        ("1\t1\n2\n", "expected 'n<TAB>V(n)'", 6),
        ("1\t1\n# degree=3\n", "metadata after the first coefficient", 6),
    ],
)
def test_malformed_rows(tmp_path, body, message, line):
    with pytest.raises(TableFormatError, match=message) as excinfo:
        ingest_table(_table(tmp_path, body))
    assert excinfo.value.line_number == line


@pytest.mark.error
@pytest.mark.parametrize(
    ("header", "body", "message"),
    [
        ("# degree=3\n# r1=1\n# r2=0\n# disc=-108\n", "1\t1\n", "header degree=3 but r1 \\+ 2\\*r2 = 1"),
        ("# degree=3\n# r1=1\n# r2=1\n", "1\t1\n", "missing header '# disc='"),
        ("# degree=three\n# r1=1\n# r2=1\n# disc=-108\n", "1\t1\n", "degree must be an integer"),
        (HEADER + "# r1=1\n", "1\t1\n", "duplicate header 'r1'"),
        (HEADER, "", "no coefficients"),
        (HEADER, "1\t2\n", "V\\(1\\) must be 1"),
    ],
)
def test_malformed_headers(tmp_path, header, body, message):
    with pytest.raises(TableFormatError, match=message):
        ingest_table(_table(tmp_path, body, header=header))
