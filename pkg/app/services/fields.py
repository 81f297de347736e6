from __future__ import annotations

import logging
import threading
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from sympy import divisors
from sympy.functions.combinatorial.numbers import jacobi_symbol

from models import CoefficientSource, FieldDescriptor, PrecisionContext, _is_fundamental_discriminant

logger = logging.getLogger(__name__)


class CoefficientTableExhausted(LookupError, ValueError):
    """Raised when a coefficient is requested beyond the end of a table."""

    def __init__(self, label: str, requested: int, max_index: int) -> None:
        super().__init__(
            f"{label}: coefficient V({requested}) requested but the table ends at n={max_index}"
        )
        self.requested = requested
        self.max_index = max_index


class UnknownFieldError(ValueError):
    """Raised when a field selector is neither a registry label nor a table file."""


def is_fundamental_discriminant(disc: int) -> bool:
    return _is_fundamental_discriminant(disc)


def kronecker_symbol(disc: int, n: int) -> int:
    """Kronecker symbol (disc/n) for n >= 1."""
    if n == 0:
        raise ValueError("kronecker_symbol is undefined at n = 0")
    if n < 0:
        raise ValueError("kronecker_symbol expects a positive n")
    result = 1
    while n % 2 == 0:
        n //= 2
        if disc % 2 == 0:
            return 0
        result *= 1 if disc % 8 in (1, 7) else -1
    if n == 1:
        return result
    return result * int(jacobi_symbol(disc % n, n))


# ---------------------------------------------------------------------------
# Built-in registry
# ---------------------------------------------------------------------------

_LOG_GOLDEN_RATIO = "0.48121182505960344749775891342436842313518433438566051966101816884016"
_LOG_SILVER_RATIO = "0.88137358701954302523260932497979230902816032826163541075329560718269"

BUILTIN_FIELDS: dict[str, FieldDescriptor] = {
    "Q": FieldDescriptor(
        label="Q", degree_d=1, r1=1, r2=0, disc_abs=1, disc_signed=1,
        class_number_h=1, regulator_R="1", roots_of_unity_w=2,
        coefficient_source=CoefficientSource.RATIONAL_FIELD,
    ),
    "Q(i)": FieldDescriptor(
        label="Q(i)", degree_d=2, r1=0, r2=1, disc_abs=4, disc_signed=-4,
        class_number_h=1, regulator_R="1", roots_of_unity_w=4,
        coefficient_source=CoefficientSource.QUADRATIC_CHARACTER,
    ),
    "Q(sqrt-3)": FieldDescriptor(
        label="Q(sqrt-3)", degree_d=2, r1=0, r2=1, disc_abs=3, disc_signed=-3,
        class_number_h=1, regulator_R="1", roots_of_unity_w=6,
        coefficient_source=CoefficientSource.QUADRATIC_CHARACTER,
    ),
    "Q(sqrt5)": FieldDescriptor(
        label="Q(sqrt5)", degree_d=2, r1=2, r2=0, disc_abs=5, disc_signed=5,
        class_number_h=1, regulator_R=_LOG_GOLDEN_RATIO, roots_of_unity_w=2,
        coefficient_source=CoefficientSource.QUADRATIC_CHARACTER,
        fundamental_unit=(1, 1, 2),
    ),
    "Q(sqrt2)": FieldDescriptor(
        label="Q(sqrt2)", degree_d=2, r1=2, r2=0, disc_abs=8, disc_signed=8,
        class_number_h=1, regulator_R=_LOG_SILVER_RATIO, roots_of_unity_w=2,
        coefficient_source=CoefficientSource.QUADRATIC_CHARACTER,
        fundamental_unit=(1, 1, 1),
    ),
    "Q(sqrt-5)": FieldDescriptor(
        label="Q(sqrt-5)", degree_d=2, r1=0, r2=1, disc_abs=20, disc_signed=-20,
        class_number_h=2, regulator_R="1", roots_of_unity_w=2,
        coefficient_source=CoefficientSource.QUADRATIC_CHARACTER,
    ),
}

FIELD_ALIASES: dict[str, str] = {
    "q": "Q",
    "qi": "Q(i)",
    "q(i)": "Q(i)",
    "qsqrt-1": "Q(i)",
    "qsqrt-3": "Q(sqrt-3)",
    "q(sqrt-3)": "Q(sqrt-3)",
    "qsqrt5": "Q(sqrt5)",
    "q(sqrt5)": "Q(sqrt5)",
    "qsqrt2": "Q(sqrt2)",
    "q(sqrt2)": "Q(sqrt2)",
    "qsqrt-5": "Q(sqrt-5)",
    "q(sqrt-5)": "Q(sqrt-5)",
}


def builtin_field(label: str) -> FieldDescriptor:
    canonical = FIELD_ALIASES.get(label.strip().lower())
    if canonical is None:
        raise UnknownFieldError(
            f"Unknown field {label!r}; built-ins are {', '.join(sorted(BUILTIN_FIELDS))}"
        )
    return BUILTIN_FIELDS[canonical]


def resolve_field(selector: str) -> FieldDescriptor:
    """Return a built-in field by label/alias, or ingest a coefficient table file."""
    if selector.strip().lower() in FIELD_ALIASES:
        return builtin_field(selector)
    path = Path(selector)
    if path.is_file():
        from app.repositories.tables_repo import ingest_table

        return ingest_table(path)
    raise UnknownFieldError(
        f"{selector!r} is neither a built-in field ({', '.join(sorted(BUILTIN_FIELDS))}) "
        "nor a readable coefficient table"
    )


# ---------------------------------------------------------------------------
# Ideal counts
# ---------------------------------------------------------------------------


def _character_table(disc: int) -> list[int]:
    modulus = abs(disc)
    return [0] + [kronecker_symbol(disc, residue) for residue in range(1, modulus)]


def _compute_counts(field: FieldDescriptor, n_max: int) -> list[int]:
    if field.is_rational:
        return [0] + [1] * n_max
    if field.is_quadratic:
        chi = _character_table(field.disc_signed)
        modulus = abs(field.disc_signed)
        counts = [0] * (n_max + 1)
        for divisor in range(1, n_max + 1):
            value = chi[divisor % modulus]
            if value:
                for multiple in range(divisor, n_max + 1, divisor):
                    counts[multiple] += value
        return counts
    table = field.coefficients or ()
    return [0] + list(table[:n_max])


class CoefficientCache:
    """Session-local memo of V_K(1..N), grown by doubling.

    The backing list is replaced, never mutated, so readers holding an older
    list stay consistent while another thread extends the cache.
    """

    def __init__(self, field: FieldDescriptor) -> None:
        self.field = field
        self._values: list[int] = [0]
        self._logs: dict[int, list[Any]] = {}
        self._lock = threading.Lock()

    def upto(self, n_max: int) -> list[int]:
        """Return a list whose index n holds V(n) for 1 <= n <= n_max."""
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        values = self._values
        if len(values) > n_max:
            return values
        with self._lock:
            if len(self._values) <= n_max:
                limit = self.field.table_length
                if limit is not None and n_max > limit:
                    raise CoefficientTableExhausted(self.field.label, n_max, limit)
                target = max(n_max, 2 * (len(self._values) - 1), 64)
                if limit is not None:
                    target = min(target, limit)
                self._values = _compute_counts(self.field, target)
                logger.debug("Coefficient cache for %s extended to n=%s", self.field.label, target)
            return self._values

    def logs(self, mp: Any, n_max: int) -> list[Any]:
        """log(n) for 0 < n <= n_max at the precision of ``mp`` (index 0 unused)."""
        with self._lock:
            table = self._logs.get(mp.prec)
            if table is None or len(table) <= n_max:
                start = 1 if table is None else len(table)
                stop = max(n_max, 2 * (start - 1), 64)
                table = (table or [mp.zero]) + [mp.log(n) for n in range(start, stop + 1)]
                self._logs[mp.prec] = table
            return table


def ideal_count(field: FieldDescriptor, n: int, cache: Optional[CoefficientCache] = None) -> int:
    """V_K(n), the number of integral ideals of norm n."""
    if n < 1:
        raise ValueError("ideal_count expects n >= 1")
    if cache is not None:
        return cache.upto(n)[n]
    if field.is_rational:
        return 1
    if field.is_quadratic:
        return sum(kronecker_symbol(field.disc_signed, int(d)) for d in divisors(n))
    limit = field.table_length or 0
    if n > limit:
        raise CoefficientTableExhausted(field.label, n, limit)
    return field.coefficients[n - 1]


def ideal_counts(field: FieldDescriptor, n_max: int, cache: Optional[CoefficientCache] = None) -> list[int]:
    """[V(1), ..., V(n_max)]."""
    values = (cache or CoefficientCache(field)).upto(n_max)
    return values[1 : n_max + 1]


def divisor_sigma(a: int, n: int) -> Fraction:
    """sigma_a(n) = sum of d**a over the divisors of n, exactly."""
    if n < 1:
        raise ValueError("divisor_sigma expects n >= 1")
    return sum((Fraction(int(d)) ** a for d in divisors(n)), Fraction(0))


# ---------------------------------------------------------------------------
# Class number formula constants
# ---------------------------------------------------------------------------


def regulator(field: FieldDescriptor, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    if field.is_real_quadratic and field.fundamental_unit is not None:
        a, b, c = field.fundamental_unit
        unit = (a + b * mp.sqrt(field.unit_radicand)) / c
        return abs(mp.log(abs(unit)))
    return ctx.real(field.regulator_R)


def residue_H(field: FieldDescriptor, ctx: PrecisionContext) -> Any:
    """Residue of the Dedekind zeta function at s = 1."""
    mp = ctx.mp
    numerator = mp.mpf(2) ** field.r1 * (2 * mp.pi) ** field.r2 * field.class_number_h * regulator(field, ctx)
    return numerator / (field.roots_of_unity_w * mp.sqrt(field.disc_abs))


def constant_C(field: FieldDescriptor, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    return mp.mpf(2) ** (field.r1 - 1) * (2 * mp.pi) ** field.r2 / mp.sqrt(field.disc_abs)


__all__ = [
    "BUILTIN_FIELDS",
    "CoefficientCache",
    "CoefficientTableExhausted",
    "FIELD_ALIASES",
    "UnknownFieldError",
    "builtin_field",
    "constant_C",
    "divisor_sigma",
    "ideal_count",
    "ideal_counts",
    "is_fundamental_discriminant",
    "kronecker_symbol",
    "regulator",
    "residue_H",
    "resolve_field",
]
