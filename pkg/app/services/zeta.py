"""Bernoulli numbers, Riemann zeta at even integers and Dedekind zeta values."""

from __future__ import annotations

import logging
import math
import threading
from fractions import Fraction
from math import comb
from typing import Any, Optional

from sympy import primerange

from app.services.errors import ZetaConvergenceError
from app.services.fields import (
    CoefficientCache,
    CoefficientTableExhausted,
    ideal_count,
    kronecker_symbol,
    residue_H,
)
from models import FieldDescriptor, PrecisionContext

logger = logging.getLogger(__name__)

# growth exponent assumed for V_K(n) = O(n^delta) in Dirichlet tail estimates
SERIES_DELTA = 0.1
_FIRST_BLOCK = 256
# ideal counts summed by residue_extrapolation
RESIDUE_TERMS = 2**18


class ZetaDomainError(ValueError):
    """Raised when a zeta value is requested outside the supported domain."""

    def __init__(self, message: str, *, required_terms: Optional[int] = None) -> None:
        super().__init__(message)
        self.required_terms = required_terms


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

# exact rationals, so one process-wide table serves every PrecisionContext; entries are append-only
_BERNOULLI: list[Fraction] = [Fraction(1)]
_BERNOULLI_LOCK = threading.Lock()


def bernoulli(n: int) -> Fraction:
    """Exact B_n with B_1 = -1/2, from sum_{k=0}^{n} C(n+1, k) B_k = 0."""
    if n < 0:
        raise ValueError("bernoulli expects n >= 0")
    if n >= 3 and n % 2 == 1:
        return Fraction(0)
    if n < len(_BERNOULLI):
        return _BERNOULLI[n]
    with _BERNOULLI_LOCK:
        while len(_BERNOULLI) <= n:
            m = len(_BERNOULLI)
            if m >= 3 and m % 2 == 1:
                _BERNOULLI.append(Fraction(0))
                continue
            total = sum((comb(m + 1, k) * _BERNOULLI[k] for k in range(m)), Fraction(0))
            _BERNOULLI.append(-total / (m + 1))
    return _BERNOULLI[n]


def riemann_zeta_even(m: int, ctx: PrecisionContext) -> Any:
    """zeta(2m) = (-1)^(m+1) (2 pi)^(2m) B_2m / (2 (2m)!)."""
    if m < 1:
        raise ValueError("riemann_zeta_even expects m >= 1")
    mp = ctx.mp
    value = (2 * mp.pi) ** (2 * m) * ctx.real(bernoulli(2 * m)) / (2 * math.factorial(2 * m))
    return value if m % 2 == 1 else -value


def riemann_zeta_odd_negative(n: int) -> Fraction:
    """zeta(n) for odd n <= -1, exactly: -B_(1-n) / (1-n)."""
    if n > -1 or n % 2 == 0:
        raise ValueError("riemann_zeta_odd_negative expects an odd n <= -1")
    return -bernoulli(1 - n) / (1 - n)


# ---------------------------------------------------------------------------
# Dedekind zeta for Re(s) > 1
# ---------------------------------------------------------------------------


def _character_values(disc: int) -> list[int]:
    return [0] + [kronecker_symbol(disc, k) for k in range(1, abs(disc))]


def _closed_form_zeta(field: FieldDescriptor, s: Any, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    if field.is_rational:
        return mp.zeta(s)
    if field.is_quadratic:
        return mp.zeta(s) * mp.dirichlet(s, _character_values(field.disc_signed))
    raise ZetaDomainError(f"{field.label}: no closed form; use the Dirichlet series")


def required_dirichlet_terms(sigma: float, tail: float) -> Optional[int]:
    exponent = sigma - 1 - SERIES_DELTA
    if exponent <= 0:
        return None
    log10_terms = -math.log10(tail) / exponent
    if log10_terms > 18:
        return None
    return math.ceil(10**log10_terms)


def _series_zeta(
    field: FieldDescriptor,
    s: Any,
    ctx: PrecisionContext,
    cache: Optional[CoefficientCache],
) -> Any:
    """Dirichlet series sum V(n) n^-s with doubling until the tail estimate is met.

    With e = 1 - sigma + delta, the tail beyond hi is estimated from the last
    block (lo, hi] as block * hi^e / (lo^e - hi^e).
    """
    mp = ctx.mp
    cache = cache or CoefficientCache(field)
    sigma = float(mp.re(s))
    growth = 1 - sigma + SERIES_DELTA
    if growth >= 0:
        raise ZetaDomainError(f"{field.label}: Re(s) = {sigma} is too close to 1 for a Dirichlet series")
    tail = ctx.tail()
    limit = field.table_length if field.table_length is not None else ctx.max_series_terms

    def block(lo: int, hi: int) -> tuple[Any, Any]:
        values = cache.upto(hi)
        logs = cache.logs(mp, hi)
        total, majorant = mp.mpf(0), mp.mpf(0)
        for n in range(lo, hi + 1):
            v = values[n]
            if v:
                total += v * mp.exp(-s * logs[n])
                majorant += abs(v) * mp.exp(-sigma_mp * logs[n])
        return total, majorant

    sigma_mp = mp.re(s)
    n = min(_FIRST_BLOCK, limit)
    total, _ = block(1, n)
    while True:
        if n >= limit:
            required = required_dirichlet_terms(sigma, float(ctx.series_tail_eps))
            raise ZetaConvergenceError(
                f"{field.label}: zeta({mp.nstr(s, 8)}) needs more than {limit} Dirichlet terms",
                required_terms=required if required is not None else -1,
            )
        hi = min(2 * n, limit)
        last, majorant = block(n + 1, hi)
        total += last
        estimate = majorant * hi**growth / (n**growth - hi**growth)
        n = hi
        logger.debug("Dirichlet series for %s: N=%s tail estimate %s", field.label, n, mp.nstr(estimate, 5))
        if estimate <= tail:
            return total


def dedekind_zeta(
    field: FieldDescriptor,
    s: Any,
    ctx: PrecisionContext,
    *,
    method: str = "auto",
    cache: Optional[CoefficientCache] = None,
) -> Any:
    """zeta_K(s) for Re(s) >= 1 + margin.

    ``method="auto"`` factors quadratic fields as zeta(s) L(s, chi_D) and uses the
    Dirichlet series only for table-backed fields; ``method="series"`` forces the
    series for any field.
    """
    mp = ctx.mp
    s = mp.mpmathify(s)
    sigma = mp.re(s)
    margin = ctx.real(ctx.zeta_margin)
    if sigma < 1 + margin:
        required = required_dirichlet_terms(float(sigma), float(ctx.series_tail_eps))
        raise ZetaDomainError(
            f"Re(s) = {mp.nstr(sigma, 8)} is closer to 1 than the margin {ctx.zeta_margin}; "
            f"the Dirichlet tail would need {required if required is not None else 'unboundedly many'} terms",
            required_terms=required,
        )
    if method not in ("auto", "series"):
        raise ValueError(f"Unknown zeta method {method!r}")
    if method == "auto" and (field.is_rational or field.is_quadratic):
        return _closed_form_zeta(field, s, ctx)
    return _series_zeta(field, s, ctx, cache)


# ---------------------------------------------------------------------------
# Functional equation
# ---------------------------------------------------------------------------


def _is_integer(mp: Any, s: Any) -> bool:
    return mp.im(s) == 0 and mp.isint(mp.re(s))


def functional_equation_factor(field: FieldDescriptor, s: Any, ctx: PrecisionContext) -> Any:
    """A(s) with zeta_K(s) = A(s) zeta_K(1 - s).

    A(s) = D^(1/2-s) 2^(ds-r2) pi^(ds-r1-r2) Gamma(1-s)^(r1+r2) sin(pi s/2)^r1 / Gamma(s)^r2.
    For totally real fields and s >= 1 the equivalent form with
    Gamma(1-s) sin(pi s/2) = pi / (2 Gamma(s) cos(pi s/2)) is used.
    """
    mp = ctx.mp
    s = mp.mpmathify(s)
    d, r1, r2 = field.degree_d, field.r1, field.r2
    prefactor = mp.power(field.disc_abs, mp.mpf(1) / 2 - s) * mp.power(2, d * s - r2) * mp.power(mp.pi, d * s - r1 - r2)
    if _is_integer(mp, s) and int(mp.re(s)) >= 1:
        k = int(mp.re(s))
        if r2 > 0 or k % 2 == 1:
            raise ZetaDomainError(f"{field.label}: the functional equation factor has a pole at s = {k}")
        return prefactor * (mp.pi / (2 * mp.gamma(s) * mp.cospi(s / 2))) ** r1
    factor = prefactor * mp.gamma(1 - s) ** (r1 + r2) * mp.sinpi(s / 2) ** r1
    if r2:
        factor *= mp.rgamma(s) ** r2
    return factor


def dedekind_zeta_nonpositive(field: FieldDescriptor, n: int, ctx: PrecisionContext) -> Any:
    """zeta_K(n) for integers n <= 0 through the functional equation.

    Trivial zeros are returned as exact zeros. At n = 0 the pole of zeta_K(1 - s)
    cancels against the vanishing gamma/sine factors; the limit is
    -sqrt(D) 2^-r2 pi^-1 (pi/2)^r1 H when r1 + r2 = 1.
    """
    if n > 0:
        raise ValueError("dedekind_zeta_nonpositive expects n <= 0")
    mp = ctx.mp
    r1, r2, d = field.r1, field.r2, field.degree_d
    if n == 0:
        if r1 + r2 >= 2:
            return mp.mpf(0)
        H = residue_H(field, ctx)
        return -mp.sqrt(field.disc_abs) * mp.mpf(2) ** (-r2) / mp.pi * (mp.pi / 2) ** r1 * H
    if n % 2 == 0:
        return mp.mpf(0)
    if r2 > 0:
        return mp.mpf(0)
    if field.is_rational:
        return ctx.real(riemann_zeta_odd_negative(n))
    m = (1 - n) // 2
    factor = (
        mp.power(field.disc_abs, mp.mpf(1) / 2 - n)
        * mp.power(2, d * n)
        * mp.power(mp.pi, d * n - r1)
        * mp.gamma(2 * m) ** r1
    )
    if (m * r1) % 2:
        factor = -factor
    return factor * mp.re(dedekind_zeta(field, 2 * m, ctx))


def zeta_even_positive(field: FieldDescriptor, j: int, ctx: PrecisionContext) -> Any:
    """zeta_K(2j); j = 0 gives zeta_K(0)."""
    if j < 0:
        raise ValueError("zeta_even_positive expects j >= 0")
    if j == 0:
        return dedekind_zeta_nonpositive(field, 0, ctx)
    if field.is_rational:
        return riemann_zeta_even(j, ctx)
    return ctx.mp.re(dedekind_zeta(field, 2 * j, ctx))


# ---------------------------------------------------------------------------
# Cross-checks
# ---------------------------------------------------------------------------


def euler_product(field: FieldDescriptor, s: Any, prime_bound: int, ctx: PrecisionContext) -> Any:
    """Truncated Euler product over primes p <= prime_bound."""
    mp = ctx.mp
    s = mp.mpmathify(s)
    if field.table_length is not None and prime_bound > field.table_length:
        raise CoefficientTableExhausted(field.label, prime_bound, field.table_length)
    product = mp.mpf(1)
    for p in primerange(2, prime_bound + 1):
        p = int(p)
        x = mp.power(p, -s)
        if field.is_rational:
            product /= 1 - x
        elif field.is_quadratic:
            chi = kronecker_symbol(field.disc_signed, p)
            if chi == 1:
                product /= (1 - x) ** 2
            elif chi == -1:
                product /= 1 - x * x
            else:
                product /= 1 - x
        else:
            local = mp.mpf(1)
            power, k = p, 1
            while power <= field.table_length:
                local += ideal_count(field, power) * x**k
                power *= p
                k += 1
            product *= local
    return product


def rational_reconstruct(
    value: Any,
    max_denominator: int,
    tol: Any,
    ctx: PrecisionContext,
) -> Optional[Fraction]:
    """Best rational with denominator <= max_denominator, if it lies within tol."""
    mp = ctx.mp
    number = mp.mpmathify(value)
    if abs(mp.im(number)) > tol:
        return None
    real = mp.mpf(mp.re(number))
    mantissa, exponent = real.man_exp
    exact = Fraction(int(mantissa)) * Fraction(2) ** int(exponent) if mantissa else Fraction(0)
    candidate = exact.limit_denominator(max_denominator)
    if abs(ctx.real(candidate) - real) <= tol:
        return candidate
    return None


def klingen_siegel_quotient(
    field: FieldDescriptor,
    m: int,
    ctx: PrecisionContext,
    *,
    max_denominator: int = 10**6,
) -> tuple[Any, Optional[Fraction]]:
    """zeta_K(2m) sqrt(D) / pi^(2md) and its rational reconstruction (totally real K)."""
    if not field.is_totally_real:
        raise ZetaDomainError(f"{field.label} is not totally real")
    if m < 1:
        raise ValueError("klingen_siegel_quotient expects m >= 1")
    mp = ctx.mp
    quotient = zeta_even_positive(field, m, ctx) * mp.sqrt(field.disc_abs) / mp.pi ** (2 * m * field.degree_d)
    return quotient, rational_reconstruct(quotient, max_denominator, 1000 * ctx.target(), ctx)


def _riesz_mean(counts: list[int], n_max: int) -> int:
    """sum_{n <= N} (N - n) V(n), exactly."""
    return sum((n_max - n) * counts[n] for n in range(1, n_max + 1) if counts[n])


def residue_extrapolation(
    field: FieldDescriptor,
    ctx: PrecisionContext,
    *,
    n_max: int = RESIDUE_TERMS,
    cache: Optional[CoefficientCache] = None,
) -> Any:
    """Estimate of lim (s-1) zeta_K(s) from the partial sums of V(n) alone.

    2/N^2 sum_{n<=N} (N - n) V(n) = H + 2 zeta_K(0)/N + O(N^(-5/4)) for quadratic
    fields; Richardson between N and N/2 removes the 1/N term. Independent of
    h, R, w and of any zeta formula. Table-backed fields use their whole table
    and converge more slowly.
    """
    mp = ctx.mp
    limit = field.table_length
    if limit is not None:
        n_max = min(n_max, limit)
    n_max -= n_max % 2
    if n_max < 64:
        raise ZetaDomainError(f"{field.label}: {n_max} ideal counts are too few to extrapolate the residue")
    counts = (cache or CoefficientCache(field)).upto(n_max)
    half = n_max // 2
    coarse = 2 * ctx.real(Fraction(_riesz_mean(counts, half), half * half))
    fine = 2 * ctx.real(Fraction(_riesz_mean(counts, n_max), n_max * n_max))
    estimate = 2 * fine - coarse
    logger.debug("Residue of %s from %s ideal counts: %s (fine %s)", field.label, n_max, mp.nstr(estimate, 12),
                 mp.nstr(fine, 12))
    return estimate


__all__ = [
    "SERIES_DELTA",
    "ZetaDomainError",
    "bernoulli",
    "dedekind_zeta",
    "dedekind_zeta_nonpositive",
    "euler_product",
    "functional_equation_factor",
    "klingen_siegel_quotient",
    "rational_reconstruct",
    "required_dirichlet_terms",
    "residue_extrapolation",
    "riemann_zeta_even",
    "riemann_zeta_odd_negative",
    "zeta_even_positive",
]
