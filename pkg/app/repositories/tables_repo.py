"""Coefficient table files: one ``n<TAB>V(n)`` line per index, ``#`` lines carry field metadata."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from app.services.fields import ideal_counts, regulator
from models import CoefficientSource, FieldDescriptor, FieldValidationError, PrecisionContext

logger = logging.getLogger(__name__)

REQUIRED_HEADERS = ("degree", "r1", "r2", "disc")
OPTIONAL_HEADERS = ("label", "class_number", "regulator", "roots_of_unity")


class TableFormatError(ValueError):
    """Raised when a coefficient table file is malformed or inconsistent."""

    def __init__(self, message: str, *, line_number: Optional[int] = None) -> None:
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)
        self.line_number = line_number


def _parse_header(line: str, line_number: int, headers: dict[str, str]) -> None:
    body = line.lstrip("#").strip()
    if "=" not in body:
        return
    key, value = (part.strip() for part in body.split("=", 1))
    key = key.lower()
    if key not in REQUIRED_HEADERS + OPTIONAL_HEADERS:
        return
    if key in headers:
        raise TableFormatError(f"duplicate header {key!r}", line_number=line_number)
    headers[key] = value


def _header_int(headers: dict[str, str], key: str, default: Optional[int] = None) -> int:
    raw = headers.get(key)
    if raw is None:
        if default is None:
            raise TableFormatError(f"missing header '# {key}='")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise TableFormatError(f"header {key} must be an integer, got {raw!r}") from exc


def _read_rows(path: Path) -> tuple[dict[str, str], pd.DataFrame]:
    headers: dict[str, str] = {}
    rows: list[tuple[int, str, str]] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("#"):
                if rows:
                    raise TableFormatError("metadata after the first coefficient", line_number=line_number)
                _parse_header(line, line_number, headers)
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2:
                raise TableFormatError(f"expected 'n<TAB>V(n)', got {line!r}", line_number=line_number)
            rows.append((line_number, parts[0].strip(), parts[1].strip()))
    frame = pd.DataFrame(rows, columns=["line", "n", "value"])
    return headers, frame


def _validate_rows(frame: pd.DataFrame) -> list[int]:
    if frame.empty:
        raise TableFormatError("the table has no coefficients")
    for column in ("n", "value"):
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = frame[numeric.isna() | (numeric != numeric.round())]
        if not bad.empty:
            first = bad.iloc[0]
            raise TableFormatError(f"{column} is not an integer: {first[column]!r}", line_number=int(first["line"]))
        frame[column] = numeric.astype("int64")
    expected = pd.Series(range(1, len(frame) + 1), index=frame.index)
    gaps = frame[frame["n"] != expected]
    if not gaps.empty:
        first = gaps.iloc[0]
        position = frame.index.get_loc(gaps.index[0])
        raise TableFormatError(
            f"expected index {position + 1}, found {int(first['n'])}", line_number=int(first["line"])
        )
    negative = frame[frame["value"] < 0]
    if not negative.empty:
        first = negative.iloc[0]
        raise TableFormatError("ideal counts must be nonnegative", line_number=int(first["line"]))
    return [int(value) for value in frame["value"]]


def ingest_table(path: Union[str, Path]) -> FieldDescriptor:
    """Read a coefficient table into a descriptor with an ExternalTable source."""
    path = Path(path)
    headers, frame = _read_rows(path)
    coefficients = _validate_rows(frame)
    degree = _header_int(headers, "degree")
    r1 = _header_int(headers, "r1")
    r2 = _header_int(headers, "r2")
    disc = _header_int(headers, "disc")
    if degree != r1 + 2 * r2:
        raise TableFormatError(f"header degree={degree} but r1 + 2*r2 = {r1 + 2 * r2}")
    try:
        field = FieldDescriptor(
            label=headers.get("label", path.stem),
            degree_d=degree,
            r1=r1,
            r2=r2,
            disc_abs=abs(disc),
            disc_signed=disc,
            class_number_h=_header_int(headers, "class_number", 1),
            regulator_R=headers.get("regulator", "1"),
            roots_of_unity_w=_header_int(headers, "roots_of_unity", 2),
            coefficient_source=CoefficientSource.EXTERNAL_TABLE,
            table_path=str(path),
            coefficients=tuple(coefficients),
        )
    except FieldValidationError as exc:
        raise TableFormatError(str(exc)) from exc
    logger.info("Ingested %s: degree %s, %s coefficients from %s", field.label, degree, len(coefficients), path)
    return field


def write_table(field: FieldDescriptor, path: Union[str, Path], n_max: int) -> Path:
    """Export V(1..n_max) of any field with computable coefficients."""
    path = Path(path)
    ctx = PrecisionContext.from_digits(30)
    header_lines = [
        f"# degree={field.degree_d}",
        f"# r1={field.r1}",
        f"# r2={field.r2}",
        f"# disc={field.disc_signed}",
        f"# label={field.label}",
        f"# class_number={field.class_number_h}",
        f"# regulator={ctx.mp.nstr(regulator(field, ctx), 30)}",
        f"# roots_of_unity={field.roots_of_unity_w}",
    ]
    counts = ideal_counts(field, n_max)
    frame = pd.DataFrame({"n": range(1, n_max + 1), "value": counts})
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(header_lines) + "\n")
        frame.to_csv(handle, sep="\t", header=False, index=False, lineterminator="\n")
    logger.info("Wrote %s coefficients of %s to %s", n_max, field.label, path)
    return path


__all__ = ["TableFormatError", "ingest_table", "write_table"]
