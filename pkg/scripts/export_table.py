#!/usr/bin/env python3
"""
Coefficient table export for zetaforge

Writes V(1..N) of a built-in field in the coefficient table format
(``n<TAB>V(n)`` lines under ``# key=value`` metadata headers). The output
can be edited or fed back through ``--field path/to/table.tsv``.

Usage:
    python scripts/export_table.py --field Qsqrt5 --terms 20000 data/qsqrt5.tsv
"""

import sys
from pathlib import Path

import click

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.repositories.tables_repo import write_table  # noqa: E402
from app.services.fields import BUILTIN_FIELDS, UnknownFieldError, builtin_field  # noqa: E402


@click.command()
@click.option("--field", "label", required=True, help=f"One of {', '.join(BUILTIN_FIELDS)} or an alias.")
@click.option("--terms", type=int, default=10000, show_default=True, help="Number of coefficients.")
@click.argument("destination", type=click.Path(dir_okay=False))
def main(label: str, terms: int, destination: str) -> None:
    """Export the ideal counts of a built-in field."""
    try:
        field = builtin_field(label)
    except UnknownFieldError as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(2)
    if terms < 1:
        click.echo("ERROR: --terms must be positive", err=True)
        sys.exit(2)
    path = write_table(field, destination, terms)
    click.echo(f"Wrote {terms} coefficients of {field.label} to {path}")


if __name__ == "__main__":
    main()
