"""The kernel Omega_K(x) and Lambert-type series sum V(n) n^a Omega_K(n y / D)."""

from __future__ import annotations

import logging
import math
import threading
from fractions import Fraction
from typing import Any, Callable, Optional

from app.services.errors import SeriesTruncationError
from app.services.fields import CoefficientCache
from app.services.special import bessel_K, build_contour, gamma_factor, integrate_line, strip_half_width
from app.services.zeta import dedekind_zeta, required_dirichlet_terms
from models import ContourSpec, FieldDescriptor, KernelMethod, KernelSeriesResult, PrecisionContext

logger = logging.getLogger(__name__)

OMEGA_METHODS = ("auto", "bessel", "mellin-barnes")
LAMBERT_METHODS = ("auto", "mellin-barnes")


class KernelDomainError(ValueError):
    """Raised for kernel arguments outside Re(x) > 0 or unsupported method choices."""


class GeneralSignatureUnsupported(ValueError):
    """Raised when a field exceeds the degree cap of the Mellin-Barnes path."""


class EvaluationSession:
    """Caches shared by every kernel evaluation of one field at one precision.

    Holds the ideal counts, divisor convolutions and the x-independent line
    values zeta_K(s) G(s) so repeated kernels on the same contour reuse them.
    """

    def __init__(self, field: FieldDescriptor, ctx: PrecisionContext) -> None:
        self.field = field
        self.ctx = ctx
        self.coefficients = CoefficientCache(field)
        self._convolutions: dict[int, list[Any]] = {}
        self._line_values: dict[tuple[Any, ...], Any] = {}
        self._lock = threading.Lock()

    def counts(self, n_max: int) -> list[int]:
        return self.coefficients.upto(n_max)

    def zeta(self, s: Any) -> Any:
        return dedekind_zeta(self.field, s, self.ctx, cache=self.coefficients)

    def convolution(self, a: int, n_max: int) -> list[Any]:
        """c(N) = sum_{n | N} V(n) n^a V(N/n) for N <= n_max (index 0 unused)."""
        with self._lock:
            cached = self._convolutions.get(a)
            if cached is not None and len(cached) > n_max:
                return cached
        size = max(n_max, 64, 2 * (len(cached) - 1) if cached else 0)
        counts = self.counts(size)
        mp = self.ctx.mp
        zero: Any = 0 if a >= 0 else mp.mpf(0)
        values: list[Any] = [zero] * (size + 1)
        for n in range(1, size + 1):
            v = counts[n]
            if not v:
                continue
            weight = v * n**a if a >= 0 else v * mp.power(n, a)
            for k in range(1, size // n + 1):
                if counts[k]:
                    values[n * k] += weight * counts[k]
        with self._lock:
            self._convolutions[a] = values
        return values

    def line_value(self, key: tuple[Any, ...], compute: Callable[[], Any]) -> Any:
        with self._lock:
            if key in self._line_values:
                return self._line_values[key]
        value = compute()
        with self._lock:
            self._line_values[key] = value
        return value


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------


def _a_priori_terms(tail_bound: Callable[[int], Any], tail: Any, max_terms: int) -> Optional[int]:
    """Smallest M (up to bisection) with tail_bound(M) <= tail, or None past max_terms."""
    upper = 8
    while True:
        bound = tail_bound(upper)
        if bound is not None and bound <= tail:
            break
        upper *= 2
        if upper > max_terms:
            return None
    lower = upper // 2
    while upper - lower > 1:
        middle = (lower + upper) // 2
        bound = tail_bound(middle)
        if bound is not None and bound <= tail:
            upper = middle
        else:
            lower = middle
    return upper


def _empirical_sum(term: Callable[[int], Any], ctx: PrecisionContext, label: str) -> tuple[Any, Any, int]:
    tail = ctx.tail()
    total = ctx.mp.mpf(0)
    quiet = 0
    n = 0
    while quiet < 3:
        n += 1
        if n > ctx.max_series_terms:
            raise SeriesTruncationError(f"{label}: no convergence within {ctx.max_series_terms} terms")
        value = term(n)
        total += value
        quiet = quiet + 1 if abs(value) <= tail / 4 else 0
    extra = ctx.mp.mpf(0)
    for k in range(n + 1, 2 * n + 1):
        extra += term(k)
    if abs(extra) > tail:
        raise SeriesTruncationError(
            f"{label}: doubling the terms moved the sum by {ctx.mp.nstr(abs(extra), 5)}",
            achieved_error=abs(extra),
        )
    return total + extra, abs(extra), 2 * n


def _truncated_sum(
    term: Callable[[int], Any],
    tail_bound: Callable[[int], Any],
    ctx: PrecisionContext,
    method: KernelMethod,
    label: str,
    terms: Optional[int] = None,
) -> KernelSeriesResult:
    """Sum ``term`` up to the a-priori cutoff, or exactly ``terms`` terms when given."""
    if terms is not None:
        total = ctx.mp.mpf(0)
        for n in range(1, terms + 1):
            total += term(n)
        bound = tail_bound(terms)
        return KernelSeriesResult(value=total, truncation_error_bound=ctx.mp.inf if bound is None else bound,
                                  terms_used=terms, method=method, certified=bound is not None)
    tail = ctx.tail()
    terms = _a_priori_terms(tail_bound, tail, ctx.max_series_terms)
    if terms is None:
        logger.warning("%s: a-priori tail bound stalled; falling back to empirical stopping", label)
        value, bound, used = _empirical_sum(term, ctx, label)
        return KernelSeriesResult(value=value, truncation_error_bound=bound, terms_used=used,
                                  method=method, certified=False)
    total = ctx.mp.mpf(0)
    for n in range(1, terms + 1):
        total += term(n)
    logger.debug("%s: %s terms, tail bound %s", label, terms, ctx.mp.nstr(tail_bound(terms), 5))
    return KernelSeriesResult(value=total, truncation_error_bound=tail_bound(terms), terms_used=terms, method=method)


def _decay_rate(x: Any, ctx: PrecisionContext) -> Any:
    """rho with Re(2 e^(+-i pi/4) sqrt(j x)) >= rho sqrt(j)."""
    mp = ctx.mp
    return 2 * mp.sqrt(abs(x)) * mp.cos(abs(mp.arg(x)) / 2 + mp.pi / 4)


def _bessel_tail(scale: Any, power: Any, rho: Any, x_abs: Any, ctx: PrecisionContext) -> Callable[[int], Any]:
    """Tail of sum_{j>M} scale j^power e^(-rho sqrt j) by 2 rho^(-2p-2) Gamma(2p+2, rho sqrt M)."""
    mp = ctx.mp

    def bound(m: int) -> Any:
        if m * x_abs < 1 or mp.sqrt(m) <= 2 * power / rho:
            return None
        return scale * 2 * mp.power(rho, -2 * power - 2) * mp.gammainc(2 * power + 2, rho * mp.sqrt(m))

    return bound


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _quadratic_term(field: FieldDescriptor, u: Any, ctx: PrecisionContext) -> Any:
    """K_0(2e sqrt u) +- K_0(2e' sqrt u) with e = e^(i pi/4), scaled for the field."""
    mp = ctx.mp
    root = 2 * mp.sqrt(u)
    rotation = mp.expjpi(mp.mpf(1) / 4)
    if mp.im(u) == 0:
        upper = bessel_K(0, rotation * root, ctx)
        if field.is_real_quadratic:
            return 2 * mp.re(upper)
        return -4 / mp.pi * mp.im(upper)
    upper = bessel_K(0, rotation * root, ctx)
    lower = bessel_K(0, mp.conj(rotation) * root, ctx)
    if field.is_real_quadratic:
        return upper + lower
    return 2j / mp.pi * (upper - lower)


def _bessel_omega(
    field: FieldDescriptor, x: Any, session: EvaluationSession, terms: Optional[int] = None
) -> KernelSeriesResult:
    ctx = session.ctx
    mp = ctx.mp
    rho = _decay_rate(x, ctx)
    scale = 3 * mp.sqrt(mp.pi) * mp.power(abs(x), -mp.mpf(1) / 4)
    bound = _bessel_tail(scale, mp.mpf(1) / 4, rho, abs(x), ctx)
    method = KernelMethod.BESSEL_REAL_QUAD if field.is_real_quadratic else KernelMethod.BESSEL_IMAG_QUAD

    def term(j: int) -> Any:
        v = session.counts(j)[j]
        return v * _quadratic_term(field, j * x, ctx) if v else mp.mpf(0)

    return _truncated_sum(term, bound, ctx, method, f"Omega[{field.label}]({mp.nstr(x, 8)})", terms)


# ---------------------------------------------------------------------------
# Mellin-Barnes
# ---------------------------------------------------------------------------


def _certifiable(field: FieldDescriptor, sigma: Fraction, ctx: PrecisionContext) -> bool:
    if field.table_length is None:
        return True
    required = required_dirichlet_terms(float(sigma), float(ctx.series_tail_eps))
    return required is not None and 2 * required <= field.table_length


def _abscissa(field: FieldDescriptor, base: Fraction, shift: int, ctx: PrecisionContext) -> Fraction:
    """Smallest c = base + k (k >= 0) with zeta_K certifiable at c and c - shift."""
    c = base
    while not (_certifiable(field, c, ctx) and _certifiable(field, c - shift, ctx)):
        c += 1
        if c > 64:
            raise GeneralSignatureUnsupported(
                f"{field.label}: the coefficient table is too short for a certified Mellin-Barnes contour"
            )
    return c


def _singularities(field: FieldDescriptor, c: Fraction, shift: Optional[int]) -> list[Fraction]:
    points = [Fraction(1), Fraction(0)]
    if shift is not None:
        points.append(Fraction(1 + shift))
    if field.r1 == 0:
        nearest_odd = 2 * math.floor(float(c) / 2) + 1
        points += [Fraction(nearest_odd), Fraction(nearest_odd + 2)]
    return points


def _mellin_barnes(
    field: FieldDescriptor,
    argument: Any,
    session: EvaluationSession,
    *,
    shift: Optional[int],
    c: Fraction,
    min_nodes: int = 0,
) -> KernelSeriesResult:
    """(1/2 pi i) int zeta_K(s - shift) zeta_K(s) G(s) argument^(-s) ds (shift None: one zeta)."""
    ctx = session.ctx
    mp = ctx.mp
    if field.degree_d > ctx.max_general_degree:
        raise GeneralSignatureUnsupported(
            f"{field.label}: degree {field.degree_d} exceeds the Mellin-Barnes cap {ctx.max_general_degree}"
        )
    log_arg = mp.log(argument)
    tag = ("omega",) if shift is None else ("lambert", shift)

    def line_factor(s: Any) -> Any:
        def compute() -> Any:
            value = session.zeta(s) * gamma_factor(field, s, ctx)
            if shift is not None:
                value *= session.zeta(s - shift)
            return value

        return session.line_value(tag + (c, mp.im(s), mp.prec), compute)

    def integrand(s: Any) -> Any:
        return line_factor(s) * mp.exp(-s * log_arg)

    cc = ctx.real(c)
    zeta_bound = mp.re(session.zeta(cc))
    if shift is not None:
        zeta_bound *= mp.re(session.zeta(cc - shift))
    arg_abs = abs(mp.arg(argument))
    scale = zeta_bound * mp.power(abs(argument), -cc)

    def envelope(t: Any) -> Any:
        return scale * abs(gamma_factor(field, mp.mpc(cc, t), ctx)) * mp.exp(t * arg_abs)

    if ctx.quad_height_T is not None:
        contour = ContourSpec(abscissa_c=c, height_T=ctx.quad_height_T, nodes=ctx.quad_nodes)
    else:
        contour = build_contour(ctx, c, envelope)
    peak = envelope(mp.mpf(0))
    guard = 16 * math.ceil(max(0.0, float(mp.log(peak, 2))) / 16) if peak > 1 else 0
    logger.info(
        "Mellin-Barnes for %s on Re(s)=%s up to T=%s (%s guard bits)", field.label, c, contour.height_T, guard
    )
    line = integrate_line(
        integrand, contour, ctx,
        strip=strip_half_width(c, _singularities(field, c, shift)),
        symmetric=mp.im(argument) == 0,
        guard_bits=guard,
        min_nodes=min_nodes,
    )
    value = mp.re(line.value) if mp.im(argument) == 0 else line.value
    return KernelSeriesResult(
        value=value,
        truncation_error_bound=line.error,
        terms_used=line.nodes_used,
        method=KernelMethod.MELLIN_BARNES,
        quadrature_error=line.error,
    )


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _session_for(field: FieldDescriptor, ctx: PrecisionContext, session: Optional[EvaluationSession]) -> EvaluationSession:
    if session is None:
        return EvaluationSession(field, ctx)
    if session.field is not field and session.field != field:
        raise KernelDomainError("session belongs to a different field")
    return session


def _check_terms(terms: Optional[int]) -> None:
    if terms is not None and terms < 1:
        raise KernelDomainError(f"terms must be at least 1, got {terms}")


def omega(
    field: FieldDescriptor,
    x: Any,
    ctx: PrecisionContext,
    *,
    method: str = "auto",
    session: Optional[EvaluationSession] = None,
    terms: Optional[int] = None,
) -> KernelSeriesResult:
    """Omega_K(x) for Re(x) > 0.

    ``auto`` picks 1/(e^x - 1) for Q, the K_0 pair sums for quadratic fields and
    the Mellin-Barnes integral otherwise; ``bessel`` and ``mellin-barnes`` force
    a method. ``terms`` overrides the a-priori cutoff: exactly that many series
    terms, or at least that many quadrature nodes on the Mellin-Barnes line. The
    Q closed form ignores it.
    """
    mp = ctx.mp
    x = mp.mpmathify(x)
    if mp.re(x) <= 0:
        raise KernelDomainError(f"Omega_K requires Re(x) > 0, got {mp.nstr(x, 10)}")
    if method not in OMEGA_METHODS:
        raise KernelDomainError(f"Unknown kernel method {method!r}; choose from {', '.join(OMEGA_METHODS)}")
    _check_terms(terms)
    session = _session_for(field, ctx, session)
    if method == "bessel" and not field.is_quadratic:
        raise KernelDomainError(f"{field.label}: the Bessel form only exists for quadratic fields")
    if method == "auto" and field.is_rational:
        return KernelSeriesResult(value=1 / mp.expm1(x), truncation_error_bound=mp.mpf(0), terms_used=1,
                                  method=KernelMethod.CLOSED_FORM_Q)
    if method in ("auto", "bessel") and field.is_quadratic:
        return _bessel_omega(field, x, session, terms)
    c = _abscissa(field, ctx.quad_line_c, 0, ctx)
    return _mellin_barnes(field, x, session, shift=None, c=c, min_nodes=terms or 0)


def _rational_lambert(a: int, y: Any, ctx: PrecisionContext, terms: Optional[int] = None) -> KernelSeriesResult:
    mp = ctx.mp
    rho = mp.re(y)
    power = max(a, 0)

    def term(n: int) -> Any:
        return mp.power(n, a) / mp.expm1(n * y)

    def bound(m: int) -> Any:
        if m * rho <= power:
            return None
        return mp.power(rho, -power - 1) * mp.gammainc(power + 1, rho * m) / (1 - mp.exp(-rho))

    return _truncated_sum(term, bound, ctx, KernelMethod.CLOSED_FORM_Q, f"Lambert[Q](a={a})", terms)


def _quadratic_lambert(
    field: FieldDescriptor, a: int, y: Any, session: EvaluationSession, terms: Optional[int] = None
) -> KernelSeriesResult:
    """sum_N c(N) k(N Y), the Lambert series reordered by N = n j."""
    ctx = session.ctx
    mp = ctx.mp
    rho = _decay_rate(y, ctx)
    power = 1 + max(a, 0) - mp.mpf(1) / 4
    scale = 12 * mp.sqrt(mp.pi) * mp.power(abs(y), -mp.mpf(1) / 4)
    bound = _bessel_tail(scale, power, rho, abs(y), ctx)
    method = KernelMethod.BESSEL_REAL_QUAD if field.is_real_quadratic else KernelMethod.BESSEL_IMAG_QUAD

    def term(n: int) -> Any:
        weight = session.convolution(a, n)[n]
        return weight * _quadratic_term(field, n * y, ctx) if weight else mp.mpf(0)

    return _truncated_sum(term, bound, ctx, method, f"Lambert[{field.label}](a={a})", terms)


def lambert_series(
    field: FieldDescriptor,
    a: int,
    y: Any,
    ctx: PrecisionContext,
    *,
    method: str = "auto",
    session: Optional[EvaluationSession] = None,
    terms: Optional[int] = None,
) -> KernelSeriesResult:
    """sum_{n>=1} V(n) n^a Omega_K(n y / D_K) with a certified tail; ``terms`` as in omega."""
    mp = ctx.mp
    y = mp.mpmathify(y)
    if mp.re(y) <= 0:
        raise KernelDomainError(f"lambert_series requires Re(y) > 0, got {mp.nstr(y, 10)}")
    if method not in LAMBERT_METHODS:
        raise KernelDomainError(f"Unknown Lambert method {method!r}; choose from {', '.join(LAMBERT_METHODS)}")
    _check_terms(terms)
    session = _session_for(field, ctx, session)
    reduced = y / field.disc_abs
    if method == "auto" and field.is_rational:
        return _rational_lambert(a, reduced, ctx, terms)
    if method == "auto" and field.is_quadratic:
        return _quadratic_lambert(field, a, reduced, session, terms)
    c = _abscissa(field, Fraction(3, 2) + max(a, 0), a, ctx)
    return _mellin_barnes(field, reduced, session, shift=a, c=c, min_nodes=terms or 0)


__all__ = [
    "EvaluationSession",
    "GeneralSignatureUnsupported",
    "KernelDomainError",
    "LAMBERT_METHODS",
    "OMEGA_METHODS",
    "lambert_series",
    "omega",
]
