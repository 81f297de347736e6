from collections.abc import Iterator
from pathlib import Path

import mpmath
import pytest
from click.testing import CliRunner
from sympy import factorint
from sympy.ntheory.residue_ntheory import nthroot_mod

from app import create_app
from app.services.fields import builtin_field
from models import PrecisionContext

CUBIC_TABLE_TERMS = 20000


def _cube_root_of_two_roots(p: int) -> int:
    roots = nthroot_mod(2, 3, p, all_roots=True)
    return len(roots or [])


def _local_count(p: int, k: int) -> int:
    """V(p^k) for Q(2^(1/3)) from the splitting of x^3 - 2 modulo p."""
    if p in (2, 3):
        return 1
    roots = _cube_root_of_two_roots(p)
    if roots == 3:
        return (k + 1) * (k + 2) // 2
    if roots == 1:
        return k // 2 + 1
    return 1 if k % 3 == 0 else 0


def cubic_counts(n_max: int) -> list[int]:
    counts = []
    for n in range(1, n_max + 1):
        value = 1
        for p, k in factorint(n).items():
            value *= _local_count(int(p), int(k))
        counts.append(value)
    return counts


def write_cubic_table(path: Path, n_max: int = CUBIC_TABLE_TERMS) -> Path:
    mp = mpmath.MPContext()
    mp.dps = 60
    root = mp.cbrt(2)
    regulator = mp.log(1 + root + root * root)
    lines = [
        "# degree=3",
        "# r1=1",
        "# r2=1",
        "# disc=-108",
        "# label=Q(cbrt2)",
        "# class_number=1",
        f"# regulator={mp.nstr(regulator, 50)}",
        "# roots_of_unity=2",
    ]
    lines += [f"{n}\t{value}" for n, value in enumerate(cubic_counts(n_max), start=1)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def cubic_table(tmp_path_factory: pytest.TempPathFactory) -> Path:
    return write_cubic_table(tmp_path_factory.mktemp("tables") / "cbrt2.tsv")


@pytest.fixture()
def ctx() -> PrecisionContext:
    return PrecisionContext.from_digits(15)


@pytest.fixture()
def ctx30() -> PrecisionContext:
    return PrecisionContext.from_digits(30)


@pytest.fixture()
def rational():
    return builtin_field("Q")


@pytest.fixture()
def gaussian():
    return builtin_field("Qi")


@pytest.fixture()
def golden():
    return builtin_field("Qsqrt5")


@pytest.fixture()
def app(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("ZETAFORGE_DIGITS", "15")
    monkeypatch.setenv("ZETAFORGE_REPORT_TIMING", "false")

    application = create_app()
    application.config.update(TESTING=True)

    yield application


@pytest.fixture()
def client(app) -> Iterator:
    with app.test_client() as client:
        yield client


@pytest.fixture()
def runner(monkeypatch: pytest.MonkeyPatch) -> CliRunner:
    monkeypatch.setenv("ZETAFORGE_REPORT_TIMING", "false")
    monkeypatch.setenv("ZETAFORGE_SWEEP_WORKERS", "2")
    return CliRunner()
