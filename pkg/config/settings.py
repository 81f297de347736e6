import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

# Track if .env has been loaded to avoid reloading multiple times
_ENV_LOADED = False


def _ensure_env_loaded() -> None:
    """Automatically load .env file from project root if not already loaded."""
    global _ENV_LOADED
    if _ENV_LOADED:
        return

    try:
        from dotenv import load_dotenv

        # Find project root (parent of config directory)
        base_dir = Path(__file__).resolve().parent.parent
        env_path = base_dir / ".env"

        if env_path.exists():
            load_dotenv(env_path, override=True)
        else:
            # Fallback: try loading from current directory
            load_dotenv(override=True)

        _ENV_LOADED = True
    except ImportError:
        # python-dotenv not installed, skip
        pass


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() not in {"0", "false", "off", "no"}


def _env_fraction(name: str, default: str) -> Fraction:
    raw = os.getenv(name, default).strip()
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{name} must be a rational number, got {raw!r}") from exc


@dataclass(frozen=True)
class Settings:
    DEFAULT_DIGITS: int
    GUARD_BITS: int
    TOLERANCE_FACTOR: int
    ZETA_MARGIN: Fraction
    MAX_SERIES_TERMS: int
    MAX_GENERAL_DEGREE: int
    QUAD_MAX_REFINEMENTS: int
    SWEEP_WORKERS: int
    ESCALATION_ATTEMPTS: int
    ESCALATION_BITS: int
    REPORT_TIMING: bool
    LOG_LEVEL: str
    SERVICE_NAME: str
    API_HOST: str
    API_PORT: int


def get_settings() -> Settings:
    """Get application settings, automatically loading .env file if needed."""
    _ensure_env_loaded()
    return Settings(
        DEFAULT_DIGITS=int(os.getenv("ZETAFORGE_DIGITS", "30")),
        GUARD_BITS=int(os.getenv("ZETAFORGE_GUARD_BITS", "32")),
        TOLERANCE_FACTOR=int(os.getenv("ZETAFORGE_TOLERANCE_FACTOR", "1000")),
        ZETA_MARGIN=_env_fraction("ZETAFORGE_ZETA_MARGIN", "1/8"),
        MAX_SERIES_TERMS=int(os.getenv("ZETAFORGE_MAX_SERIES_TERMS", "200000")),
        MAX_GENERAL_DEGREE=int(os.getenv("ZETAFORGE_MAX_GENERAL_DEGREE", "3")),
        QUAD_MAX_REFINEMENTS=int(os.getenv("ZETAFORGE_QUAD_MAX_REFINEMENTS", "6")),
        SWEEP_WORKERS=int(os.getenv("ZETAFORGE_SWEEP_WORKERS", "4")),
        ESCALATION_ATTEMPTS=int(os.getenv("ZETAFORGE_ESCALATION_ATTEMPTS", "2")),
        ESCALATION_BITS=int(os.getenv("ZETAFORGE_ESCALATION_BITS", "64")),
        REPORT_TIMING=_env_bool("ZETAFORGE_REPORT_TIMING", True),
        LOG_LEVEL=os.getenv("ZETAFORGE_LOG_LEVEL", "INFO").upper(),
        SERVICE_NAME=os.getenv("ZETAFORGE_SERVICE_NAME", "zetaforge"),
        API_HOST=os.getenv("ZETAFORGE_API_HOST", "127.0.0.1"),
        API_PORT=int(os.getenv("ZETAFORGE_API_PORT", "5001")),
    )
