"""Evaluation records for the zeta, kernel, eisenstein and selftest commands."""

from __future__ import annotations

import logging
import math
import random
from typing import Any, Optional

from app.services.fields import BUILTIN_FIELDS, CoefficientCache, ideal_count, residue_H
from app.services.identities import eisenstein_E_normalized, eisenstein_G, verify_lerch_classical, verify_ramanujan_classical
from app.services.kernel import EvaluationSession, omega
from app.services.parsing import parse_expression
from app.services.zeta import (
    ZetaDomainError,
    dedekind_zeta,
    dedekind_zeta_nonpositive,
    rational_reconstruct,
    residue_extrapolation,
)
from models import EvaluationRecord, FieldDescriptor, KernelSeriesResult, PrecisionContext, VerificationReport

logger = logging.getLogger(__name__)

KERNEL_CHOICES = ("auto", "bessel", "mellin-barnes", "both")
RESIDUE_TOLERANCE = 1e-5
MULTIPLICATIVITY_RANGE = 10_000
MULTIPLICATIVITY_SAMPLES = 2_000


def _number(value: Any, ctx: PrecisionContext) -> Any:
    if ctx.mp.im(value) == 0:
        return ctx.nstr(ctx.mp.re(value))
    re_text, im_text = ctx.complex_text(value)
    return {"re": re_text, "im": im_text}


def evaluate_zeta(field: FieldDescriptor, at: str, ctx: PrecisionContext) -> EvaluationRecord:
    """zeta_K at a point with Re(s) > 1 + margin, or at an integer s <= 0 with rational reconstruction."""
    mp = ctx.mp
    parsed = parse_expression(at)
    s = parsed.evaluate(ctx)
    notes: list[str] = []
    values: dict[str, Any] = {}
    if mp.im(s) == 0 and mp.isint(mp.re(s)) and int(mp.re(s)) <= 1:
        n = int(mp.re(s))
        if n == 1:
            raise ZetaDomainError(f"{field.label}: zeta_K has a pole at s = 1")
        value = dedekind_zeta_nonpositive(field, n, ctx)
        values["value"] = _number(value, ctx)
        rational = rational_reconstruct(value, 10**6, 1000 * ctx.target(), ctx)
        if rational is not None:
            values["rational"] = str(rational)
        elif field.is_totally_real:
            notes.append("no rational with denominator <= 10^6 within tolerance")
        if value == 0:
            notes.append("trivial zero")
    else:
        value = dedekind_zeta(field, s, ctx)
        values["value"] = _number(value, ctx)
    logger.info("zeta_%s(%s) = %s", field.label, parsed.text, mp.nstr(value, 15))
    return EvaluationRecord("zeta", field.label, {"at": parsed.text, "digits": str(ctx.digits)}, values, notes)


def _kernel_values(result: KernelSeriesResult, ctx: PrecisionContext) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "value": _number(result.value, ctx),
        "method": result.method.value,
        "terms_used": str(result.terms_used),
        "truncation_error_bound": ctx.nstr(result.truncation_error_bound),
    }
    if result.quadrature_error is not None:
        payload["quadrature_error"] = ctx.nstr(result.quadrature_error)
    return payload


def evaluate_kernel(
    field: FieldDescriptor,
    x: str,
    ctx: PrecisionContext,
    *,
    method: str = "auto",
    session: Optional[EvaluationSession] = None,
) -> EvaluationRecord:
    """Omega_K(x); ``both`` runs the default method and Mellin-Barnes and reports their difference."""
    if method not in KERNEL_CHOICES:
        raise ValueError(f"Unknown kernel method {method!r}; choose from {', '.join(KERNEL_CHOICES)}")
    mp = ctx.mp
    parsed = parse_expression(x)
    point = parsed.evaluate(ctx)
    session = session or EvaluationSession(field, ctx)
    params = {"x": parsed.text, "method": method, "digits": str(ctx.digits)}
    notes: list[str] = []
    if method != "both":
        result = omega(field, point, ctx, method=method, session=session)
        values = _kernel_values(result, ctx)
    else:
        primary = omega(field, point, ctx, method="auto", session=session)
        contour = omega(field, point, ctx, method="mellin-barnes", session=session)
        delta = abs(primary.value - contour.value)
        values = {
            "primary": _kernel_values(primary, ctx),
            "mellin_barnes": _kernel_values(contour, ctx),
            "agreement_delta": ctx.nstr(delta),
        }
        if delta > 10 * ctx.target():
            notes.append(f"methods disagree by {ctx.nstr(delta)}")
    if field.is_imaginary_quadratic and method != "both":
        notes.append(f"imaginary part {ctx.nstr(abs(mp.im(mp.mpmathify(result.value))))}")
    return EvaluationRecord("kernel", field.label, params, values, notes)


def evaluate_eisenstein(
    field: FieldDescriptor,
    k: int,
    z: str,
    ctx: PrecisionContext,
    *,
    normalized: bool = False,
    session: Optional[EvaluationSession] = None,
) -> EvaluationRecord:
    parsed = parse_expression(z)
    point = parsed.evaluate(ctx)
    session = session or EvaluationSession(field, ctx)
    if normalized:
        value = eisenstein_E_normalized(field, k, point, ctx, session=session)
        key = "E"
    else:
        value = eisenstein_G(field, k, point, ctx, session=session)
        key = "G"
    params = {"k": str(k), "z": parsed.text, "digits": str(ctx.digits)}
    notes = ["quasi-modular weight"] if k == 2 else []
    return EvaluationRecord("eisenstein", field.label, params, {key: _number(value, ctx)}, notes)


# ---------------------------------------------------------------------------
# Selftest
# ---------------------------------------------------------------------------


def check_residue(field: FieldDescriptor, ctx: PrecisionContext) -> EvaluationRecord:
    """Compare the class number formula residue with the extrapolated (s-1) zeta_K(s)."""
    formula = residue_H(field, ctx)
    extrapolated = residue_extrapolation(field, ctx)
    difference = abs(formula - extrapolated)
    passed = difference <= RESIDUE_TOLERANCE
    values = {
        "residue_H": ctx.nstr(formula),
        "extrapolated": ctx.nstr(extrapolated),
        "difference": ctx.nstr(difference),
        "passed": passed,
    }
    return EvaluationRecord("selftest", field.label, {"check": "residue"}, values)


def _coprime_pairs(n_max: int, samples: int, seed: int) -> list[tuple[int, int]]:
    """Every coprime pair with m n <= n_max, then ``samples`` seeded pairs with m, n <= n_max."""
    pairs = [
        (m, n)
        for m in range(2, math.isqrt(n_max) + 1)
        for n in range(m + 1, n_max // m + 1)
        if math.gcd(m, n) == 1
    ]
    if n_max < 3:
        return pairs
    rng = random.Random(seed)
    drawn = 0
    while drawn < samples:
        m, n = rng.randint(2, n_max), rng.randint(2, n_max)
        if m != n and math.gcd(m, n) == 1:
            pairs.append((min(m, n), max(m, n)))
            drawn += 1
    return pairs


def check_multiplicativity(
    field: FieldDescriptor,
    n_max: int = MULTIPLICATIVITY_RANGE,
    *,
    samples: int = MULTIPLICATIVITY_SAMPLES,
    seed: int = 0,
) -> EvaluationRecord:
    """V(mn) = V(m) V(n) for coprime m, n <= n_max.

    V(m) and V(n) come from the sieved table; V(mn) is recomputed from the
    divisors of mn, so products past the table are checked independently.
    Table-backed fields only check products inside their table.
    """
    cache = CoefficientCache(field)
    limit = field.table_length
    bound = n_max if limit is None else min(n_max, limit)
    counts = cache.upto(bound)
    checked = 0
    failures = []
    for m, n in _coprime_pairs(bound, samples, seed):
        product = m * n
        if limit is not None and product > limit:
            continue
        checked += 1
        expected = counts[product] if product <= bound else ideal_count(field, product)
        if expected != counts[m] * counts[n]:
            failures.append((m, n))
    values = {"pairs_checked": str(checked), "pairs_failed": str(len(failures)), "passed": not failures}
    notes = [f"V({m}*{n}) != V({m}) V({n})" for m, n in failures[:5]]
    logger.info("Multiplicativity on %s: %s coprime pairs up to %s, %s failures", field.label, checked, bound,
                len(failures))
    return EvaluationRecord("selftest", field.label, {"check": "multiplicativity", "n_max": str(n_max)}, values, notes)


def run_selftest(ctx: PrecisionContext) -> tuple[list[VerificationReport], list[EvaluationRecord], bool]:
    """Registry residues, multiplicativity, and the classical Ramanujan and Lerch formulas."""
    records: list[EvaluationRecord] = []
    for field in BUILTIN_FIELDS.values():
        records.append(check_residue(field, ctx))
        if not field.is_rational:
            records.append(check_multiplicativity(field))
    pi = parse_expression("pi")
    reports = [verify_ramanujan_classical(1, pi, ctx), verify_lerch_classical(0, ctx)]
    passed = all(record.values["passed"] for record in records) and all(report.passed for report in reports)
    logger.info("Selftest %s", "passed" if passed else "FAILED")
    return reports, records, passed


__all__ = [
    "KERNEL_CHOICES",
    "check_multiplicativity",
    "check_residue",
    "evaluate_eisenstein",
    "evaluate_kernel",
    "evaluate_zeta",
    "run_selftest",
]
