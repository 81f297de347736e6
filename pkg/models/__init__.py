"""Domain types shared by the numerical services, jobs, CLI and API."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import mpmath
from sympy import factorint

from config.settings import get_settings


class FieldValidationError(ValueError):
    """Raised when a field descriptor violates its arithmetic invariants."""


class PrecisionContextError(ValueError):
    """Raised when a precision context cannot support its own targets."""


class ContourError(ValueError):
    """Raised when a Mellin-Barnes contour is not admissible."""


class RunConfigError(ValueError):
    """Raised when a run configuration is incomplete or inconsistent."""


def _is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(exponent == 1 for exponent in factorint(abs(n)).values())


def _is_fundamental_discriminant(disc: int) -> bool:
    if disc in (0, 1):
        return False
    if disc % 4 == 1:
        return _is_squarefree(disc)
    if disc % 4 == 0:
        core = disc // 4
        return core % 4 in (2, 3) and _is_squarefree(core)
    return False


# ---------------------------------------------------------------------------
# Number fields
# ---------------------------------------------------------------------------


class CoefficientSource(str, enum.Enum):
    RATIONAL_FIELD = "RationalField"
    QUADRATIC_CHARACTER = "QuadraticCharacter"
    EXTERNAL_TABLE = "ExternalTable"


@dataclass(frozen=True)
class FieldDescriptor:
    """Arithmetic identity of a number field.

    ``regulator_R`` is kept as a decimal string so descriptors stay independent of
    any precision; real quadratic fields also carry ``fundamental_unit`` = (a, b, c)
    meaning (a + b*sqrt(m))/c, from which the regulator is recomputed at working
    precision. Table-backed fields carry their coefficients V(1..N) in order.
    """

    label: str
    degree_d: int
    r1: int
    r2: int
    disc_abs: int
    disc_signed: int
    class_number_h: int
    regulator_R: str
    roots_of_unity_w: int
    coefficient_source: CoefficientSource
    fundamental_unit: Optional[tuple[int, int, int]] = None
    table_path: Optional[str] = None
    coefficients: Optional[tuple[int, ...]] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.r1 < 0 or self.r2 < 0:
            raise FieldValidationError(f"{self.label}: signature must be nonnegative")
        if self.degree_d != self.r1 + 2 * self.r2:
            raise FieldValidationError(
                f"{self.label}: degree {self.degree_d} != r1 + 2*r2 = {self.r1 + 2 * self.r2}"
            )
        if self.disc_abs < 1:
            raise FieldValidationError(f"{self.label}: |discriminant| must be positive")
        if self.class_number_h < 1:
            raise FieldValidationError(f"{self.label}: class number must be positive")
        if self.roots_of_unity_w < 2:
            raise FieldValidationError(f"{self.label}: w must be at least 2")
        try:
            regulator = Fraction(self.regulator_R)
        except ValueError as exc:
            raise FieldValidationError(f"{self.label}: regulator {self.regulator_R!r} is not a number") from exc
        if regulator <= 0:
            raise FieldValidationError(f"{self.label}: regulator must be positive")

        source = self.coefficient_source
        if source is CoefficientSource.RATIONAL_FIELD:
            self._validate_rational()
        elif source is CoefficientSource.QUADRATIC_CHARACTER:
            self._validate_quadratic()
        else:
            self._validate_table()

    def _validate_rational(self) -> None:
        if (self.r1, self.r2) != (1, 0) or self.disc_abs != 1 or self.disc_signed != 1:
            raise FieldValidationError("the rational field has signature (1, 0) and discriminant 1")
        if self.roots_of_unity_w != 2:
            raise FieldValidationError("the rational field has w = 2")

    def _validate_quadratic(self) -> None:
        disc = self.disc_signed
        if not _is_fundamental_discriminant(disc):
            raise FieldValidationError(f"{self.label}: {disc} is not a fundamental discriminant")
        if self.disc_abs != abs(disc):
            raise FieldValidationError(f"{self.label}: disc_abs {self.disc_abs} != |{disc}|")
        expected = (2, 0) if disc > 0 else (0, 1)
        if (self.r1, self.r2) != expected:
            raise FieldValidationError(
                f"{self.label}: discriminant {disc} requires signature {expected}"
            )
        expected_w = {-4: 4, -3: 6}.get(disc, 2)
        if self.roots_of_unity_w != expected_w:
            raise FieldValidationError(f"{self.label}: w must be {expected_w} for D={disc}")
        if disc > 0:
            if self.fundamental_unit is None:
                raise FieldValidationError(f"{self.label}: real quadratic fields need a fundamental unit")
            a, b, c = self.fundamental_unit
            radicand = self.unit_radicand
            if c <= 0 or b == 0 or abs(a * a - radicand * b * b) != c * c:
                raise FieldValidationError(
                    f"{self.label}: ({a} + {b}*sqrt({radicand}))/{c} is not a unit"
                )
        elif self.regulator_R != "1":
            raise FieldValidationError(f"{self.label}: imaginary quadratic fields have R = 1")

    def _validate_table(self) -> None:
        if not self.coefficients:
            raise FieldValidationError(f"{self.label}: table-backed field without coefficients")
        if self.coefficients[0] != 1:
            raise FieldValidationError(f"{self.label}: V(1) must be 1, table has {self.coefficients[0]}")
        if any(value < 0 for value in self.coefficients):
            raise FieldValidationError(f"{self.label}: ideal counts must be nonnegative")

    @property
    def is_rational(self) -> bool:
        return self.coefficient_source is CoefficientSource.RATIONAL_FIELD

    @property
    def is_quadratic(self) -> bool:
        return self.coefficient_source is CoefficientSource.QUADRATIC_CHARACTER

    @property
    def is_real_quadratic(self) -> bool:
        return self.is_quadratic and self.disc_signed > 0

    @property
    def is_imaginary_quadratic(self) -> bool:
        return self.is_quadratic and self.disc_signed < 0

    @property
    def is_totally_real(self) -> bool:
        return self.r2 == 0

    @property
    def unit_radicand(self) -> int:
        """Squarefree m with K = Q(sqrt(m))."""
        disc = self.disc_signed
        return disc if disc % 4 == 1 else disc // 4

    @property
    def table_length(self) -> Optional[int]:
        return len(self.coefficients) if self.coefficients is not None else None

    def describe(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "label": self.label,
            "degree": self.degree_d,
            "r1": self.r1,
            "r2": self.r2,
            "disc_abs": self.disc_abs,
            "disc_signed": self.disc_signed,
            "class_number": self.class_number_h,
            "regulator": self.regulator_R,
            "roots_of_unity": self.roots_of_unity_w,
            "coefficient_source": self.coefficient_source.value,
        }
        if self.table_path:
            payload["table_path"] = self.table_path
            payload["table_length"] = self.table_length
        return payload


# ---------------------------------------------------------------------------
# Precision and contours
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable numeric settings of one computation.

    Every context owns a private mpmath context, so values computed under one
    context must not be mixed with values of another.
    """

    working_bits: int
    target_eps: Fraction
    series_tail_eps: Optional[Fraction] = None
    quad_line_c: Fraction = Fraction(3, 2)
    quad_height_T: Optional[Fraction] = None
    quad_nodes: int = 128
    zeta_margin: Fraction = Fraction(1, 8)
    max_series_terms: int = 200_000
    max_general_degree: int = 3
    quad_max_refinements: int = 6
    mp: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.working_bits < 24:
            raise PrecisionContextError("working_bits must be at least 24")
        if self.target_eps <= 0:
            raise PrecisionContextError("target_eps must be positive")
        if self.series_tail_eps is None:
            object.__setattr__(self, "series_tail_eps", self.target_eps / 16)
        if self.series_tail_eps <= 0:
            raise PrecisionContextError("series_tail_eps must be positive")
        floor = Fraction(1, 2 ** (self.working_bits - 8))
        if self.target_eps < floor:
            raise PrecisionContextError(
                f"target_eps {float(self.target_eps):.3e} needs more than {self.working_bits} working bits"
            )
        c = Fraction(self.quad_line_c)
        if c <= 1:
            raise PrecisionContextError("quad_line_c must exceed 1")
        if c.denominator == 1 and c.numerator % 2 == 1:
            raise PrecisionContextError("quad_line_c must not be an odd integer")
        if self.quad_height_T is not None and self.quad_height_T <= 0:
            raise PrecisionContextError("quad_height_T must be positive")
        if self.quad_nodes < 64:
            raise PrecisionContextError("quad_nodes must be at least 64")
        context = mpmath.MPContext()
        context.prec = self.working_bits
        object.__setattr__(self, "quad_line_c", c)
        object.__setattr__(self, "mp", context)

    @classmethod
    def from_digits(cls, digits: int, *, guard_bits: Optional[int] = None, **overrides: Any) -> "PrecisionContext":
        """Context targeting ``10**-digits`` with settings-driven defaults."""
        if digits < 1:
            raise PrecisionContextError("digits must be positive")
        settings = get_settings()
        guard = settings.GUARD_BITS if guard_bits is None else guard_bits
        bits = math.ceil(digits * math.log2(10)) + guard
        defaults: dict[str, Any] = {
            "zeta_margin": settings.ZETA_MARGIN,
            "max_series_terms": settings.MAX_SERIES_TERMS,
            "max_general_degree": settings.MAX_GENERAL_DEGREE,
            "quad_max_refinements": settings.QUAD_MAX_REFINEMENTS,
        }
        defaults.update(overrides)
        return cls(working_bits=bits, target_eps=Fraction(1, 10**digits), **defaults)

    def escalated(self, extra_bits: int) -> "PrecisionContext":
        """Same targets, more working bits."""
        return replace(self, working_bits=self.working_bits + extra_bits)

    @property
    def digits(self) -> int:
        return max(1, math.floor(-math.log10(self.target_eps) + 1e-9))

    def real(self, value: Any) -> Any:
        """Convert ints, Fractions and decimal strings to an mpf of this context."""
        if isinstance(value, Fraction):
            return self.mp.mpf(value.numerator) / value.denominator
        return self.mp.mpf(value)

    def target(self) -> Any:
        return self.real(self.target_eps)

    def tail(self) -> Any:
        return self.real(self.series_tail_eps)

    def nstr(self, value: Any) -> str:
        """Fixed-width scientific rendering with digits + 5 significant digits."""
        return self.mp.nstr(
            self.mp.mpf(value),
            self.digits + 5,
            strip_zeros=False,
            min_fixed=0,
            max_fixed=0,
            show_zero_exponent=True,
        )

    def complex_text(self, value: Any) -> tuple[str, str]:
        number = self.mp.mpc(value)
        return self.nstr(number.real), self.nstr(number.imag)


class QuadratureRule(str, enum.Enum):
    TRUNCATED_TRAPEZOID = "TruncatedTrapezoid"
    GAUSS_LEGENDRE_PANELS = "GaussLegendrePanels"


@dataclass(frozen=True)
class ContourSpec:
    abscissa_c: Fraction
    height_T: Fraction
    nodes: int = 128
    rule: QuadratureRule = QuadratureRule.TRUNCATED_TRAPEZOID

    def __post_init__(self) -> None:
        object.__setattr__(self, "abscissa_c", Fraction(self.abscissa_c))
        object.__setattr__(self, "height_T", Fraction(self.height_T))
        if self.abscissa_c <= 1:
            raise ContourError(f"contour abscissa must exceed 1, got {self.abscissa_c}")
        if self.height_T <= 0:
            raise ContourError("contour height must be positive")
        if self.nodes < 64:
            raise ContourError("a contour needs at least 64 nodes")

    def cos_clearance(self) -> float:
        """|cos(pi*c/2)|; must stay away from 0 when the integrand carries 1/cos."""
        return abs(math.cos(math.pi * float(self.abscissa_c) / 2))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


class KernelMethod(str, enum.Enum):
    CLOSED_FORM_Q = "ClosedFormQ"
    BESSEL_REAL_QUAD = "BesselRealQuad"
    BESSEL_IMAG_QUAD = "BesselImagQuad"
    MELLIN_BARNES = "MellinBarnes"


@dataclass(slots=True)
class KernelSeriesResult:
    value: Any
    truncation_error_bound: Any
    terms_used: int
    method: KernelMethod
    certified: bool = True
    quadrature_error: Any = None

    def __post_init__(self) -> None:
        if self.terms_used < 1:
            raise ValueError("terms_used must be at least 1")

    def diagnostics(self, ctx: PrecisionContext, label: str) -> dict[str, str]:
        payload = {
            "series": label,
            "method": self.method.value,
            "terms_used": str(self.terms_used),
            "truncation_error_bound": ctx.nstr(self.truncation_error_bound),
            "certified": "true" if self.certified else "false",
        }
        if self.quadrature_error is not None:
            payload["quadrature_error"] = ctx.nstr(self.quadrature_error)
        return payload


class IdentityId(str, enum.Enum):
    RAMANUJAN_NF = "RamanujanNF"
    RAMANUJAN_CLASSICAL = "RamanujanClassical"
    LERCH_CLASSICAL = "LerchClassical"
    LERCH_NF = "LerchNF"
    EISENSTEIN_SYMM = "EisensteinSymm"
    SERIES_EVALUATION = "SeriesEvaluation"
    QUASI_MODULAR = "QuasiModular"
    QUASI_MODULAR_Z = "QuasiModularZ"
    ETA_LOG = "EtaLog"
    EISENSTEIN_TRANSFORM = "EisensteinTransform"

    @property
    def slug(self) -> str:
        return _IDENTITY_SLUGS[self]

    @classmethod
    def parse(cls, text: str) -> "IdentityId":
        key = text.strip()
        for identity, slug in _IDENTITY_SLUGS.items():
            if key in (slug, identity.value):
                return identity
        raise ValueError(f"Unknown identity {text!r}; choose from {', '.join(_IDENTITY_SLUGS.values())}")


_IDENTITY_SLUGS: dict[IdentityId, str] = {
    IdentityId.RAMANUJAN_NF: "ramanujan-nf",
    IdentityId.RAMANUJAN_CLASSICAL: "ramanujan-classical",
    IdentityId.LERCH_CLASSICAL: "lerch-classical",
    IdentityId.LERCH_NF: "lerch-nf",
    IdentityId.EISENSTEIN_SYMM: "eisenstein-symm",
    IdentityId.SERIES_EVALUATION: "series-evaluation",
    IdentityId.QUASI_MODULAR: "quasimodular",
    IdentityId.QUASI_MODULAR_Z: "quasimodular-z",
    IdentityId.ETA_LOG: "eta-log",
    IdentityId.EISENSTEIN_TRANSFORM: "eisenstein-transform",
}


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one identity check.

    Numbers are stored already rendered by ``PrecisionContext.nstr`` so a report
    survives persistence unchanged; complex values are (re, im) pairs.
    """

    identity_id: IdentityId
    field_label: str
    params: dict[str, str]
    lhs: tuple[str, str]
    rhs: tuple[str, str]
    abs_residual: str
    rel_residual: str
    tolerance: str
    passed: bool
    terms_report: list[dict[str, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def sort_key(self) -> tuple[str, str, tuple[tuple[str, str], ...]]:
        return (self.identity_id.value, self.field_label, tuple(sorted(self.params.items())))


@dataclass(frozen=True)
class EvaluationRecord:
    """Result of a non-verification command (zeta, kernel, eisenstein)."""

    command: str
    field_label: str
    params: dict[str, str]
    values: dict[str, Any]
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


class Command(str, enum.Enum):
    VERIFY = "verify"
    KERNEL = "kernel"
    ZETA = "zeta"
    EISENSTEIN = "eisenstein"
    SWEEP = "sweep"
    SELFTEST = "selftest"


class OutputFormat(str, enum.Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


@dataclass(frozen=True)
class ParamGrid:
    m: tuple[int, ...] = ()
    k: tuple[int, ...] = ()
    alpha: tuple[str, ...] = ()
    z: tuple[str, ...] = ()
    x: tuple[str, ...] = ()
    at: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not any((self.m, self.k, self.alpha, self.z, self.x, self.at))

    def echo(self) -> dict[str, list[str]]:
        return {
            name: [str(value) for value in getattr(self, name)]
            for name in ("m", "k", "alpha", "z", "x", "at")
            if getattr(self, name)
        }


@dataclass(frozen=True)
class RunConfig:
    command: Command
    field_selector: str
    precision_digits: int
    identity_set: tuple[IdentityId, ...] = ()
    param_grid: ParamGrid = field(default_factory=ParamGrid)
    output_format: OutputFormat = OutputFormat.JSON
    output_path: Optional[Path] = None
    workers: int = 1
    method: str = "auto"
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.precision_digits < 15:
            raise RunConfigError(f"precision_digits must be at least 15, got {self.precision_digits}")
        if self.workers < 1:
            raise RunConfigError("workers must be at least 1")
        if self.command in (Command.VERIFY, Command.SWEEP) and not self.identity_set:
            raise RunConfigError(f"{self.command.value} needs at least one identity")
        if self.command is Command.SWEEP and self.param_grid.is_empty():
            raise RunConfigError("sweep needs a non-empty parameter grid")

    def field_selectors(self) -> list[str]:
        return [part.strip() for part in self.field_selector.split(",") if part.strip()]

    def echo(self) -> dict[str, object]:
        return {
            "command": self.command.value,
            "field": self.field_selector,
            "precision_digits": self.precision_digits,
            "identities": [identity.slug for identity in self.identity_set],
            "params": self.param_grid.echo(),
            "output_format": self.output_format.value,
            "method": self.method,
        }


__all__ = [
    "CoefficientSource",
    "Command",
    "ContourError",
    "ContourSpec",
    "EvaluationRecord",
    "FieldDescriptor",
    "FieldValidationError",
    "IdentityId",
    "KernelMethod",
    "KernelSeriesResult",
    "OutputFormat",
    "ParamGrid",
    "PrecisionContext",
    "PrecisionContextError",
    "QuadratureRule",
    "RunConfig",
    "RunConfigError",
    "VerificationReport",
]
