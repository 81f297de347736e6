"""File repositories for coefficient tables and report documents."""

from .reports_repo import load_reports, render, save_output
from .tables_repo import TableFormatError, ingest_table, write_table

__all__ = [
    "load_reports",
    "render",
    "save_output",
    "TableFormatError",
    "ingest_table",
    "write_table",
]
