"""Both sides of the odd-zeta, Lerch, Eisenstein, quasi-modular and eta-log identities."""

from __future__ import annotations

import logging
import math
from typing import Any, Mapping, Optional

from app.services.fields import constant_C, residue_H
from app.services.kernel import EvaluationSession, lambert_series
from app.services.parsing import ParsedExpression, parse_expression, parse_integer
from app.services.zeta import (
    bernoulli,
    dedekind_zeta,
    dedekind_zeta_nonpositive,
    rational_reconstruct,
    riemann_zeta_odd_negative,
    zeta_even_positive,
)
from config.settings import get_settings
from models import FieldDescriptor, IdentityId, KernelSeriesResult, PrecisionContext, VerificationReport

logger = logging.getLogger(__name__)

PARAMETERS_BY_IDENTITY: dict[IdentityId, tuple[str, ...]] = {
    IdentityId.RAMANUJAN_NF: ("m", "alpha"),
    IdentityId.RAMANUJAN_CLASSICAL: ("m", "alpha"),
    IdentityId.LERCH_CLASSICAL: ("m",),
    IdentityId.LERCH_NF: ("m",),
    IdentityId.EISENSTEIN_SYMM: ("m", "alpha"),
    IdentityId.SERIES_EVALUATION: ("m",),
    IdentityId.QUASI_MODULAR: ("alpha",),
    IdentityId.QUASI_MODULAR_Z: ("z",),
    IdentityId.ETA_LOG: ("alpha",),
    IdentityId.EISENSTEIN_TRANSFORM: ("k", "z"),
}

# identities that do not depend on a number field
FIELD_FREE = (IdentityId.RAMANUJAN_CLASSICAL, IdentityId.LERCH_CLASSICAL)


class IdentityDomainError(ValueError):
    """Raised when identity parameters violate the hypotheses of the identity."""


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _value(parameter: Any, ctx: PrecisionContext) -> tuple[Any, str]:
    if isinstance(parameter, str):
        parameter = parse_expression(parameter)
    if isinstance(parameter, ParsedExpression):
        return parameter.evaluate(ctx), parameter.text
    value = ctx.mp.mpmathify(parameter)
    return value, _text(value, ctx)


def _text(value: Any, ctx: PrecisionContext) -> str:
    mp = ctx.mp
    if mp.im(value) == 0:
        return ctx.nstr(mp.re(value))
    re_text, im_text = ctx.complex_text(value)
    return f"{re_text}{'' if im_text.startswith('-') else '+'}{im_text}i"


def _dual(field: FieldDescriptor, alpha: Any, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    if mp.re(alpha) <= 0:
        raise IdentityDomainError(f"Re(alpha) must be positive, got {mp.nstr(alpha, 10)}")
    beta = mp.pi ** (2 * field.degree_d) / alpha
    if mp.re(beta) <= 0:
        raise IdentityDomainError("Re(beta) = Re(pi^(2d)/alpha) must be positive")
    return beta


def _zeta_odd(field: FieldDescriptor, n: int, ctx: PrecisionContext) -> Any:
    """zeta_K at an odd integer n != 1."""
    if n >= 3:
        return ctx.mp.re(dedekind_zeta(field, n, ctx))
    return dedekind_zeta_nonpositive(field, n, ctx)


def _lambert(
    field: FieldDescriptor,
    a: int,
    y: Any,
    ctx: PrecisionContext,
    session: EvaluationSession,
    label: str,
    collected: list[tuple[str, KernelSeriesResult]],
) -> Any:
    result = lambert_series(field, a, y, ctx, session=session)
    collected.append((label, result))
    return result.value


def _residuals(lhs: Any, rhs: Any, ctx: PrecisionContext) -> tuple[Any, Any]:
    mp = ctx.mp
    absolute = abs(mp.mpmathify(lhs) - mp.mpmathify(rhs))
    scale = abs(lhs)
    relative = absolute / scale if scale > 0 else absolute
    return absolute, relative


def _tolerance(ctx: PrecisionContext, series: list[tuple[str, KernelSeriesResult]]) -> Any:
    floor = get_settings().TOLERANCE_FACTOR * ctx.target()
    reported = [result.truncation_error_bound for _, result in series]
    reported += [result.quadrature_error for _, result in series if result.quadrature_error is not None]
    return max([floor] + [10 * bound for bound in reported])


def _build_report(
    identity: IdentityId,
    field_label: str,
    params: dict[str, str],
    lhs: Any,
    rhs: Any,
    ctx: PrecisionContext,
    series: Optional[list[tuple[str, KernelSeriesResult]]] = None,
    notes: Optional[list[str]] = None,
    extra_terms: Optional[list[dict[str, str]]] = None,
) -> VerificationReport:
    series = series or []
    absolute, relative = _residuals(lhs, rhs, ctx)
    tolerance = _tolerance(ctx, series)
    measured = relative if abs(lhs) > 1 else absolute
    passed = bool(measured <= tolerance)
    terms = [result.diagnostics(ctx, label) for label, result in series] + list(extra_terms or [])
    report = VerificationReport(
        identity_id=identity,
        field_label=field_label,
        params=params,
        lhs=ctx.complex_text(lhs),
        rhs=ctx.complex_text(rhs),
        abs_residual=ctx.nstr(absolute),
        rel_residual=ctx.nstr(relative),
        tolerance=ctx.nstr(tolerance),
        passed=passed,
        terms_report=terms,
        notes=list(notes or []),
    )
    log = logger.info if passed else logger.warning
    log("%s on %s %s: residual %s (tolerance %s) %s", identity.value, field_label, params,
        report.abs_residual, report.tolerance, "passed" if passed else "FAILED")
    return report


def _branch_notes(beta: Any, ctx: PrecisionContext) -> list[str]:
    if ctx.mp.im(beta) != 0:
        return ["beta is not real; (-beta)^m uses the principal branch"]
    return []


# ---------------------------------------------------------------------------
# Odd zeta values
# ---------------------------------------------------------------------------


def ramanujan_finite_sum(field: FieldDescriptor, m: int, alpha: Any, beta: Any, ctx: PrecisionContext) -> Any:
    """sum_{j=0}^{m+1} (-1)^(m+j) zeta_K(2j) zeta_K(2m-2j+2) alpha^(m+1-j) beta^j / pi^((2m+1)d+1)."""
    mp = ctx.mp
    total = mp.mpf(0)
    for j in range(0, m + 2):
        term = zeta_even_positive(field, j, ctx) * zeta_even_positive(field, m - j + 1, ctx)
        term *= alpha ** (m + 1 - j) * beta**j
        total += term if (m + j) % 2 == 0 else -term
    return total / mp.pi ** ((2 * m + 1) * field.degree_d + 1)


def verify_ramanujan_nf(
    field: FieldDescriptor,
    m: int,
    alpha: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    if m == 0:
        raise IdentityDomainError("the odd-zeta identity needs m != 0; use eta-log for the m = 0 analogue")
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    alpha, alpha_text = _value(alpha, ctx)
    beta = _dual(field, alpha, ctx)
    d = field.degree_d
    H = residue_H(field, ctx)
    C = constant_C(field, ctx)
    zeta_odd = _zeta_odd(field, 2 * m + 1, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    s_alpha = _lambert(field, -2 * m - 1, 2**d * alpha, ctx, session, "S(alpha)", series)
    s_beta = _lambert(field, -2 * m - 1, 2**d * beta, ctx, session, "S(beta)", series)
    finite = ramanujan_finite_sum(field, m, alpha, beta, ctx)
    lhs = alpha ** (-m) * (H / 2 * zeta_odd + C * s_alpha)
    rhs = (-beta) ** (-m) * (H / 2 * zeta_odd + C * s_beta) + finite
    # C_K sqrt(D) 2^(r2-d) pi^(r1+r2-d) must equal the 1/2 in front of zeta(2m+1)
    prefactor = C * mp.sqrt(field.disc_abs) * mp.power(2, field.r2 - d) * mp.power(mp.pi, field.r1 + field.r2 - d)
    notes = _branch_notes(beta, ctx)
    if abs(prefactor - mp.mpf(1) / 2) > 10 * ctx.target():
        notes.append(f"constant mismatch: C_K sqrt(D) 2^(r2-d) pi^(r1+r2-d) = {ctx.nstr(prefactor)}")
    params = {"m": str(m), "alpha": alpha_text, "beta": _text(beta, ctx)}
    extra = [{"series": "finite_sum", "value": _text(finite, ctx)},
             {"series": "prefactor_check", "value": ctx.nstr(prefactor)}]
    return _build_report(IdentityId.RAMANUJAN_NF, field.label, params, lhs, rhs, ctx, series, notes, extra)


def _classical_lambert(a: int, y: Any, ctx: PrecisionContext) -> Any:
    """sum n^a / (e^(n y) - 1) summed directly."""
    mp = ctx.mp
    return mp.nsum(lambda n: mp.power(n, a) / mp.expm1(n * y), [1, mp.inf])


def _bernoulli_sum(m: int, alpha: Any, beta: Any, ctx: PrecisionContext) -> Any:
    """2^(2m) sum_{j=0}^{m+1} (-1)^j B_2j B_(2m+2-2j) / ((2j)! (2m+2-2j)!) alpha^(m+1-j) beta^j."""
    mp = ctx.mp
    total = mp.mpf(0)
    for j in range(0, m + 2):
        weight = bernoulli(2 * j) * bernoulli(2 * m + 2 - 2 * j)
        weight /= math.factorial(2 * j) * math.factorial(2 * m + 2 - 2 * j)
        term = ctx.real(weight) * alpha ** (m + 1 - j) * beta**j
        total += term if j % 2 == 0 else -term
    return mp.power(2, 2 * m) * total


def _riemann_odd(n: int, ctx: PrecisionContext) -> Any:
    if n >= 3:
        return ctx.mp.zeta(n)
    return ctx.real(riemann_zeta_odd_negative(n))


def verify_ramanujan_classical(m: int, alpha: Any, ctx: PrecisionContext) -> VerificationReport:
    """Classical Ramanujan formula with exponential Lambert sums and Bernoulli numbers."""
    if m == 0:
        raise IdentityDomainError("Ramanujan's formula needs m != 0")
    mp = ctx.mp
    alpha, alpha_text = _value(alpha, ctx)
    if mp.re(alpha) <= 0:
        raise IdentityDomainError("Re(alpha) must be positive")
    beta = mp.pi**2 / alpha
    if mp.re(beta) <= 0:
        raise IdentityDomainError("Re(beta) must be positive")
    zeta_odd = _riemann_odd(2 * m + 1, ctx)
    s_alpha = _classical_lambert(-2 * m - 1, 2 * alpha, ctx)
    s_beta = _classical_lambert(-2 * m - 1, 2 * beta, ctx)
    finite = _bernoulli_sum(m, alpha, beta, ctx)
    lhs = alpha ** (-m) * (zeta_odd / 2 + s_alpha)
    rhs = (-beta) ** (-m) * (zeta_odd / 2 + s_beta) - finite
    params = {"m": str(m), "alpha": alpha_text, "beta": _text(beta, ctx)}
    extra = [{"series": "S(alpha)", "value": _text(s_alpha, ctx)},
             {"series": "S(beta)", "value": _text(s_beta, ctx)},
             {"series": "finite_sum", "value": _text(-finite, ctx)}]
    return _build_report(IdentityId.RAMANUJAN_CLASSICAL, "Q", params, lhs, rhs, ctx,
                         notes=_branch_notes(beta, ctx), extra_terms=extra)


def verify_lerch_classical(m: int, ctx: PrecisionContext) -> VerificationReport:
    """zeta(4m+3) = 2^(4m+2) pi^(4m+3) sum (-1)^(j+1) B_2j B_(4m+4-2j)/((2j)!(4m+4-2j)!) - 2 sum n^(-4m-3)/(e^(2 pi n)-1)."""
    mp = ctx.mp
    lhs = _riemann_odd(4 * m + 3, ctx)
    total = mp.mpf(0)
    for j in range(0, 2 * m + 3):
        weight = bernoulli(2 * j) * bernoulli(4 * m + 4 - 2 * j)
        weight /= math.factorial(2 * j) * math.factorial(4 * m + 4 - 2 * j)
        term = ctx.real(weight)
        total += -term if j % 2 == 0 else term
    finite = mp.power(2, 4 * m + 2) * mp.pi ** (4 * m + 3) * total
    series = _classical_lambert(-4 * m - 3, 2 * mp.pi, ctx)
    rhs = finite - 2 * series
    extra = [{"series": "finite_sum", "value": ctx.nstr(finite)},
             {"series": "lambert", "value": ctx.nstr(series)}]
    return _build_report(IdentityId.LERCH_CLASSICAL, "Q", {"m": str(m)}, lhs, rhs, ctx, extra_terms=extra)


def verify_lerch_nf(
    field: FieldDescriptor,
    m: int,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    d = field.degree_d
    H = residue_H(field, ctx)
    lhs = _zeta_odd(field, 4 * m + 3, ctx)
    total = mp.mpf(0)
    for j in range(0, 2 * m + 3):
        term = zeta_even_positive(field, j, ctx) * zeta_even_positive(field, 2 * m - j + 2, ctx)
        total += -term if j % 2 == 0 else term
    series: list[tuple[str, KernelSeriesResult]] = []
    lambert = _lambert(field, -4 * m - 3, (2 * mp.pi) ** d, ctx, session, "S(2pi)", series)
    weight = mp.power(2, field.r1) * (2 * mp.pi) ** field.r2 / (H * mp.sqrt(field.disc_abs))
    rhs = total / (mp.pi * H) - weight * lambert
    return _build_report(IdentityId.LERCH_NF, field.label, {"m": str(m)}, lhs, rhs, ctx, series)


# ---------------------------------------------------------------------------
# Eisenstein series
# ---------------------------------------------------------------------------


def _check_z(z: Any, ctx: PrecisionContext) -> None:
    if ctx.mp.im(z) <= 0:
        raise IdentityDomainError(f"Im(z) must be positive, got {ctx.mp.nstr(z, 10)}")


def _check_weight(k: int, minimum: int) -> None:
    if k % 2 or k < minimum:
        raise IdentityDomainError(f"k must be an even integer >= {minimum}, got {k}")


def eisenstein_G(
    field: FieldDescriptor,
    k: int,
    z: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
    collected: Optional[list[tuple[str, KernelSeriesResult]]] = None,
) -> Any:
    """(H/2C) zeta_K(1-k) + sum V(n) n^(k-1) Omega_K(-(2 pi)^d i n z / D)."""
    _check_weight(k, 2)
    mp = ctx.mp
    z, _ = _value(z, ctx)
    _check_z(z, ctx)
    session = session or EvaluationSession(field, ctx)
    constant = residue_H(field, ctx) / (2 * constant_C(field, ctx)) * dedekind_zeta_nonpositive(field, 1 - k, ctx)
    y = -(2 * mp.pi) ** field.degree_d * mp.j * z
    if mp.im(z) != 0 and mp.re(z) == 0:
        y = mp.re(y)
    result = lambert_series(field, k - 1, y, ctx, session=session)
    if collected is not None:
        collected.append((f"G_{k}({_text(z, ctx)})", result))
    return constant + result.value


def eisenstein_E_normalized(
    field: FieldDescriptor,
    k: int,
    z: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> Any:
    """G_k scaled to constant term 1; only defined for totally real fields."""
    if not field.is_totally_real:
        raise IdentityDomainError(f"{field.label}: zeta_K(1-k) vanishes, so the constant term cannot be normalized")
    constant = residue_H(field, ctx) / (2 * constant_C(field, ctx)) * dedekind_zeta_nonpositive(field, 1 - k, ctx)
    return eisenstein_G(field, k, z, ctx, session=session) / constant


def verify_eisenstein_transform(
    field: FieldDescriptor,
    k: int,
    z: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    _check_weight(k, 4)
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    z, z_text = _value(z, ctx)
    _check_z(z, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    inverted = -1 / z
    lhs = eisenstein_G(field, k, inverted, ctx, session=session, collected=series)
    rhs = z**k * eisenstein_G(field, k, z, ctx, session=session, collected=series)
    params = {"k": str(k), "z": z_text}
    return _build_report(IdentityId.EISENSTEIN_TRANSFORM, field.label, params, lhs, rhs, ctx, series)


def verify_eisenstein_symm(
    field: FieldDescriptor,
    m: int,
    alpha: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    if m <= 1:
        raise IdentityDomainError(f"the symmetric Eisenstein identity needs m > 1, got {m}")
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    alpha, alpha_text = _value(alpha, ctx)
    beta = _dual(field, alpha, ctx)
    d = field.degree_d
    series: list[tuple[str, KernelSeriesResult]] = []
    s_alpha = _lambert(field, 2 * m - 1, 2**d * alpha, ctx, session, "S(alpha)", series)
    s_beta = _lambert(field, 2 * m - 1, 2**d * beta, ctx, session, "S(beta)", series)
    lhs = alpha**m * s_alpha - (-beta) ** m * s_beta
    ratio = residue_H(field, ctx) / (2 * constant_C(field, ctx))
    rhs = -ratio * (alpha**m - (-beta) ** m) * dedekind_zeta_nonpositive(field, 1 - 2 * m, ctx)
    params = {"m": str(m), "alpha": alpha_text, "beta": _text(beta, ctx)}
    notes = _branch_notes(beta, ctx)
    if field.r2 > 0:
        notes.append("zeta_K(1-2m) is a trivial zero, so the right-hand side is exactly 0")
    return _build_report(IdentityId.EISENSTEIN_SYMM, field.label, params, lhs, rhs, ctx, series, notes)


def verify_series_evaluation(
    field: FieldDescriptor,
    m: int,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    if m <= 1 or m % 2 == 0:
        raise IdentityDomainError(f"the series evaluation needs an odd m > 1, got {m}")
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    lhs = _lambert(field, 2 * m - 1, (2 * mp.pi) ** field.degree_d, ctx, session, "S(2pi)", series)
    zeta_value = dedekind_zeta_nonpositive(field, 1 - 2 * m, ctx)
    rhs = -residue_H(field, ctx) / (2 * constant_C(field, ctx)) * zeta_value
    notes: list[str] = []
    if field.is_totally_real:
        rational = rational_reconstruct(zeta_value, 10**6, 1000 * ctx.target(), ctx)
        notes.append(
            f"zeta_K({1 - 2 * m}) = {rational}" if rational is not None
            else f"zeta_K({1 - 2 * m}) did not reconstruct to a rational with denominator <= 10^6"
        )
    return _build_report(IdentityId.SERIES_EVALUATION, field.label, {"m": str(m)}, lhs, rhs, ctx, series, notes)


def verify_quasimodular(
    field: FieldDescriptor,
    alpha: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    """Weight-2 transformation in alpha/beta form.

    The right-hand side is -(H zeta_K(-1)/2C)(alpha+beta) - pi^(d-1) zeta_K(0)^2 / C,
    the m = -1 case of the odd-zeta identity; the residual against the form
    without the 1/C on the last term is reported alongside.
    """
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    alpha, alpha_text = _value(alpha, ctx)
    beta = _dual(field, alpha, ctx)
    d = field.degree_d
    H = residue_H(field, ctx)
    C = constant_C(field, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    s_alpha = _lambert(field, 1, 2**d * alpha, ctx, session, "S(alpha)", series)
    s_beta = _lambert(field, 1, 2**d * beta, ctx, session, "S(beta)", series)
    lhs = alpha * s_alpha + beta * s_beta
    zeta_zero = dedekind_zeta_nonpositive(field, 0, ctx)
    linear = -H * dedekind_zeta_nonpositive(field, -1, ctx) / (2 * C) * (alpha + beta)
    anomaly = mp.pi ** (d - 1) * zeta_zero**2
    rhs = linear - anomaly / C
    literal = linear - anomaly
    literal_residual = abs(lhs - literal)
    notes = _branch_notes(beta, ctx)
    if literal_residual > _tolerance(ctx, series):
        notes.append(
            f"the form -zeta_K(0)^2/pi^(1-d) without 1/C_K leaves residual {ctx.nstr(literal_residual)}"
        )
    params = {"alpha": alpha_text, "beta": _text(beta, ctx)}
    extra = [{"series": "literal_anomaly_residual", "value": ctx.nstr(literal_residual)}]
    return _build_report(IdentityId.QUASI_MODULAR, field.label, params, lhs, rhs, ctx, series, notes, extra)


def verify_quasimodular_z(
    field: FieldDescriptor,
    z: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    """G_2(-1/z) = z^2 G_2(z) - z zeta_K(0)^2 / (pi i C)."""
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    z, z_text = _value(z, ctx)
    _check_z(z, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    lhs = eisenstein_G(field, 2, -1 / z, ctx, session=session, collected=series)
    correction = z * dedekind_zeta_nonpositive(field, 0, ctx) ** 2 / (mp.pi * mp.j * constant_C(field, ctx))
    rhs = z**2 * eisenstein_G(field, 2, z, ctx, session=session, collected=series) - correction
    return _build_report(IdentityId.QUASI_MODULAR_Z, field.label, {"z": z_text}, lhs, rhs, ctx, series)


def verify_eta_log(
    field: FieldDescriptor,
    alpha: Any,
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    mp = ctx.mp
    session = session or EvaluationSession(field, ctx)
    alpha, alpha_text = _value(alpha, ctx)
    beta = _dual(field, alpha, ctx)
    d = field.degree_d
    H = residue_H(field, ctx)
    C = constant_C(field, ctx)
    series: list[tuple[str, KernelSeriesResult]] = []
    s_alpha = _lambert(field, -1, 2**d * alpha, ctx, session, "S(alpha)", series)
    s_beta = _lambert(field, -1, 2**d * beta, ctx, session, "S(beta)", series)
    lhs = s_alpha - s_beta
    zeta_product = dedekind_zeta_nonpositive(field, 0, ctx) * zeta_even_positive(field, 1, ctx)
    rhs = H**2 / (4 * C) * mp.log(alpha / beta) + zeta_product / (mp.pi ** (d + 1) * C) * (alpha - beta)
    params = {"alpha": alpha_text, "beta": _text(beta, ctx)}
    return _build_report(IdentityId.ETA_LOG, field.label, params, lhs, rhs, ctx, series, _branch_notes(beta, ctx))


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _integer(params: Mapping[str, Any], name: str, identity: IdentityId) -> int:
    if name not in params:
        raise IdentityDomainError(f"{identity.slug} needs the parameter {name}")
    value = params[name]
    return value if isinstance(value, int) else parse_integer(value, name)


def _expression(params: Mapping[str, Any], name: str, identity: IdentityId) -> Any:
    if name not in params:
        raise IdentityDomainError(f"{identity.slug} needs the parameter {name}")
    return params[name]


def run_identity(
    identity: IdentityId,
    field: FieldDescriptor,
    params: Mapping[str, Any],
    ctx: PrecisionContext,
    *,
    session: Optional[EvaluationSession] = None,
) -> VerificationReport:
    """Run one identity with the parameters it consumes (see PARAMETERS_BY_IDENTITY)."""
    if identity in FIELD_FREE and not field.is_rational:
        raise IdentityDomainError(f"{identity.slug} is stated over Q only")
    if identity not in FIELD_FREE and session is None:
        session = EvaluationSession(field, ctx)
    if identity is IdentityId.RAMANUJAN_NF:
        return verify_ramanujan_nf(field, _integer(params, "m", identity), _expression(params, "alpha", identity),
                                   ctx, session=session)
    if identity is IdentityId.RAMANUJAN_CLASSICAL:
        return verify_ramanujan_classical(_integer(params, "m", identity), _expression(params, "alpha", identity), ctx)
    if identity is IdentityId.LERCH_CLASSICAL:
        return verify_lerch_classical(_integer(params, "m", identity), ctx)
    if identity is IdentityId.LERCH_NF:
        return verify_lerch_nf(field, _integer(params, "m", identity), ctx, session=session)
    if identity is IdentityId.EISENSTEIN_SYMM:
        return verify_eisenstein_symm(field, _integer(params, "m", identity), _expression(params, "alpha", identity),
                                      ctx, session=session)
    if identity is IdentityId.SERIES_EVALUATION:
        return verify_series_evaluation(field, _integer(params, "m", identity), ctx, session=session)
    if identity is IdentityId.QUASI_MODULAR:
        return verify_quasimodular(field, _expression(params, "alpha", identity), ctx, session=session)
    if identity is IdentityId.QUASI_MODULAR_Z:
        return verify_quasimodular_z(field, _expression(params, "z", identity), ctx, session=session)
    if identity is IdentityId.ETA_LOG:
        return verify_eta_log(field, _expression(params, "alpha", identity), ctx, session=session)
    return verify_eisenstein_transform(field, _integer(params, "k", identity), _expression(params, "z", identity),
                                       ctx, session=session)


__all__ = [
    "FIELD_FREE",
    "IdentityDomainError",
    "PARAMETERS_BY_IDENTITY",
    "eisenstein_E_normalized",
    "eisenstein_G",
    "ramanujan_finite_sum",
    "run_identity",
    "verify_eisenstein_symm",
    "verify_eisenstein_transform",
    "verify_eta_log",
    "verify_lerch_classical",
    "verify_lerch_nf",
    "verify_quasimodular",
    "verify_quasimodular_z",
    "verify_ramanujan_classical",
    "verify_ramanujan_nf",
    "verify_series_evaluation",
]
