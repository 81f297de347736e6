from fractions import Fraction

import pytest

from config.settings import get_settings
from models import PrecisionContext


def test_env_settings_defaults(monkeypatch):
    names = (
        "ZETAFORGE_DIGITS",
        "ZETAFORGE_ZETA_MARGIN",
        "ZETAFORGE_TOLERANCE_FACTOR",
        "ZETAFORGE_API_HOST",
        "ZETAFORGE_API_PORT",
    )
    for name in names:
        monkeypatch.delenv(name, raising=False)

    settings = get_settings()

    assert settings.DEFAULT_DIGITS == 30
    assert settings.ZETA_MARGIN == Fraction(1, 8)
    assert settings.TOLERANCE_FACTOR == 1000
    assert settings.SERVICE_NAME == "zetaforge"
    assert (settings.API_HOST, settings.API_PORT) == ("127.0.0.1", 5001)


def test_env_settings_load(monkeypatch):
    monkeypatch.setenv("ZETAFORGE_DIGITS", "45")
    monkeypatch.setenv("ZETAFORGE_ZETA_MARGIN", "1/4")
    monkeypatch.setenv("ZETAFORGE_REPORT_TIMING", "off")
    monkeypatch.setenv("ZETAFORGE_LOG_LEVEL", "debug")

    settings = get_settings()

    assert settings.DEFAULT_DIGITS == 45
    assert settings.ZETA_MARGIN == Fraction(1, 4)
    assert settings.REPORT_TIMING is False
    assert settings.LOG_LEVEL == "DEBUG"


@pytest.mark.error
def test_env_rejects_bad_margin(monkeypatch):
    monkeypatch.setenv("ZETAFORGE_ZETA_MARGIN", "a lot")

    with pytest.raises(ValueError, match="ZETAFORGE_ZETA_MARGIN"):
        get_settings()


def test_precision_context_uses_settings(monkeypatch):
    monkeypatch.setenv("ZETAFORGE_GUARD_BITS", "10")
    monkeypatch.setenv("ZETAFORGE_MAX_SERIES_TERMS", "5000")

    ctx = PrecisionContext.from_digits(20)

    assert ctx.working_bits == 67 + 10
    assert ctx.max_series_terms == 5000
    assert ctx.digits == 20
    assert ctx.series_tail_eps == Fraction(1, 16 * 10**20)
