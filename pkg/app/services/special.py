"""Complex gamma, modified Bessel K_0 / K_1/2 and vertical-line integrals."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from app.services.errors import ContourHeightError, QuadratureNonConvergence
from models import ContourSpec, FieldDescriptor, PrecisionContext, QuadratureRule

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
_MAX_HEIGHT = 4096


class PoleError(ValueError):
    """Raised when gamma is evaluated at a nonpositive integer."""


class BesselDomainError(ValueError):
    """Raised when K_nu is requested off Re(z) > 0 or for an unsupported order."""


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------


def complex_gamma(s: Any, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    s = mp.mpmathify(s)
    if mp.im(s) == 0 and mp.isint(mp.re(s)) and mp.re(s) <= 0:
        raise PoleError(f"Gamma has a pole at s = {int(mp.re(s))}")
    return mp.gamma(s)


def gamma_factor(field: FieldDescriptor, s: Any, ctx: PrecisionContext) -> Any:
    """G(s) = Gamma(s)^(r1+r2) / Gamma(1-s)^r2 * cos(pi s/2)^(r1-1)."""
    mp = ctx.mp
    r1, r2 = field.r1, field.r2
    value = mp.gamma(s) ** (r1 + r2)
    if r2:
        value *= mp.rgamma(1 - s) ** r2
    if r1 != 1:
        value *= mp.cospi(s / 2) ** (r1 - 1)
    return value


def omega_normalization(field: FieldDescriptor, ctx: PrecisionContext) -> Any:
    """2^(1-r1-r2) / pi^(1-r1/2); cancels the Meijer-G prefactor exactly."""
    mp = ctx.mp
    return mp.power(2, 1 - field.r1 - field.r2) / mp.power(mp.pi, 1 - mp.mpf(field.r1) / 2)


def meijer_prefactor(field: FieldDescriptor, ctx: PrecisionContext) -> Any:
    mp = ctx.mp
    return mp.power(2, field.r1 + field.r2 - 1) / mp.power(mp.pi, mp.mpf(field.r1) / 2 - 1)


# ---------------------------------------------------------------------------
# Modified Bessel K
# ---------------------------------------------------------------------------


def _k0_series(z: Any, ctx: PrecisionContext) -> Any:
    """Ascending series K_0(z) = -(log(z/2) + gamma) I_0(z) + sum H_k (z^2/4)^k / (k!)^2."""
    mp = ctx.mp
    magnitude = float(abs(z))
    guard = int((magnitude + float(mp.re(z))) / math.log(2)) + 16
    with mp.extraprec(guard):
        z = mp.mpmathify(z)
        quarter_square = z * z / 4
        term = mp.mpf(1)
        harmonic = mp.mpf(0)
        i0 = mp.mpf(1)
        rest = mp.mpf(0)
        k = 0
        while True:
            k += 1
            term *= quarter_square / (k * k)
            harmonic += mp.mpf(1) / k
            i0 += term
            rest += term * harmonic
            if k * k > magnitude * magnitude and abs(term) * harmonic <= mp.eps * abs(i0):
                break
        value = -(mp.log(z / 2) + mp.euler) * i0 + rest
    return +value


def _k0_asymptotic(z: Any, ctx: PrecisionContext) -> tuple[Any, Any]:
    """Large-|z| expansion truncated at its smallest term; returns (value, error bound)."""
    mp = ctx.mp
    with mp.extraprec(16):
        z = mp.mpmathify(z)
        term = mp.mpf(1)
        total = mp.mpf(1)
        k = 0
        while True:
            k += 1
            following = term * (-((2 * k - 1) ** 2)) / (8 * k * z)
            if abs(following) >= abs(term) or abs(following) <= mp.eps:
                omitted = abs(following)
                if abs(following) <= mp.eps:
                    total += following
                break
            term = following
            total += term
        prefactor = mp.sqrt(mp.pi / (2 * z)) * mp.exp(-z)
        value = prefactor * total
        error = abs(prefactor) * omitted
    return +value, +error


def asymptotic_regime_applies(z: Any, ctx: PrecisionContext) -> bool:
    """True when the smallest asymptotic term (about e^(-2|z|)) is below 2^-(prec+10)."""
    return 2 * float(abs(z)) >= (ctx.mp.prec + 10) * math.log(2)


def bessel_K(nu: Any, z: Any, ctx: PrecisionContext, *, regime: str = "auto") -> Any:
    """K_nu(z) for nu in {0, 1/2} and Re(z) > 0.

    ``regime`` forces ``"series"`` or ``"asymptotic"`` for K_0; ``"auto"`` uses the
    asymptotic expansion only where it reaches full working precision, so the
    crossover radius grows with precision (about 0.35 * working bits).
    """
    mp = ctx.mp
    z = mp.mpmathify(z)
    if mp.re(z) <= 0:
        raise BesselDomainError(f"K_nu requires Re(z) > 0, got z = {mp.nstr(z, 10)}")
    order = Fraction(str(nu)) if not isinstance(nu, Fraction) else nu
    if order == HALF:
        return mp.sqrt(mp.pi / (2 * z)) * mp.exp(-z)
    if order != 0:
        raise BesselDomainError(f"K_nu is only provided for nu in {{0, 1/2}}, got {nu}")
    if regime == "series":
        return _k0_series(z, ctx)
    if regime == "asymptotic":
        return _k0_asymptotic(z, ctx)[0]
    if regime != "auto":
        raise ValueError(f"Unknown Bessel regime {regime!r}")
    if asymptotic_regime_applies(z, ctx):
        return _k0_asymptotic(z, ctx)[0]
    return _k0_series(z, ctx)


# ---------------------------------------------------------------------------
# Line integrals
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class LineIntegral:
    value: Any
    error: Any
    height: Any
    nodes_used: int


def build_contour(
    ctx: PrecisionContext,
    c: Fraction,
    envelope: Callable[[Any], Any],
    *,
    tolerance: Any = None,
    rule: QuadratureRule = QuadratureRule.TRUNCATED_TRAPEZOID,
    start: int = 4,
) -> ContourSpec:
    """Smallest height T (grown geometrically) with envelope(T) <= tolerance / (2T)."""
    mp = ctx.mp
    tol = ctx.tail() if tolerance is None else tolerance
    height = mp.mpf(start)
    while envelope(height) > tol / (2 * height):
        height *= mp.mpf(5) / 4
        if height > _MAX_HEIGHT:
            raise ContourHeightError(
                f"integrand on Re(s) = {c} has not decayed below {mp.nstr(tol, 5)} by |t| = {_MAX_HEIGHT}"
            )
    rounded = Fraction(math.ceil(float(height) * 4), 4)
    logger.debug("Contour on Re(s)=%s gets height T=%s", c, rounded)
    return ContourSpec(abscissa_c=Fraction(c), height_T=rounded, nodes=ctx.quad_nodes, rule=rule)


def _check_height(
    integrand: Callable[[Any], Any],
    contour: ContourSpec,
    ctx: PrecisionContext,
    height: Any,
    tol: Any,
    symmetric: bool,
) -> None:
    mp = ctx.mp
    c = ctx.real(contour.abscissa_c)
    edge = abs(integrand(mp.mpc(c, height)))
    if not symmetric:
        edge = max(edge, abs(integrand(mp.mpc(c, -height))))
    if edge > tol / (2 * height):
        raise ContourHeightError(
            f"|integrand| = {mp.nstr(edge, 5)} at |t| = {mp.nstr(height, 6)} exceeds {mp.nstr(tol / (2 * height), 5)}",
            achieved_error=edge * height,
        )


def _trapezoid(
    integrand: Callable[[Any], Any],
    contour: ContourSpec,
    ctx: PrecisionContext,
    strip: float,
    tol: Any,
    symmetric: bool,
    max_refinements: int,
    min_nodes: int = 0,
) -> LineIntegral:
    mp = ctx.mp
    c = ctx.real(contour.abscissa_c)
    height_target = ctx.real(contour.height_T)
    digits_needed = -float(mp.log(tol)) + 10
    step = 2 * mp.pi * mp.mpf(strip) / digits_needed
    step = min(step, 2 * height_target / contour.nodes)
    count = int(mp.ceil(height_target / step))
    height = count * step

    def node(t: Any) -> Any:
        return integrand(mp.mpc(c, t))

    def accumulate(indices: range, h: Any) -> Any:
        total = mp.mpf(0)
        for k in indices:
            if symmetric:
                total += 2 * mp.re(node(k * h))
            else:
                total += node(k * h) + node(-k * h)
        return total

    _check_height(integrand, contour, ctx, height, tol, symmetric)

    origin = node(mp.mpf(0))
    total = (mp.re(origin) if symmetric else origin) + accumulate(range(1, count + 1), step)
    estimate = step * total / (2 * mp.pi)
    nodes_used = count + 1 if symmetric else 2 * count + 1
    h = step
    delta = None
    level = 0
    while level < max_refinements or nodes_used < min_nodes:
        level += 1
        h = h / 2
        count *= 2
        total += accumulate(range(1, count + 1, 2), h)
        nodes_used += count // 2 if symmetric else count
        refined = h * total / (2 * mp.pi)
        delta = abs(refined - estimate)
        logger.debug("Trapezoid level %s: %s nodes, delta %s", level, nodes_used, mp.nstr(delta, 5))
        estimate = refined
        if delta <= tol and nodes_used >= min_nodes:
            return LineIntegral(value=estimate, error=delta, height=height, nodes_used=nodes_used)
    raise QuadratureNonConvergence(
        f"trapezoid on Re(s) = {contour.abscissa_c} did not settle after {max_refinements} refinements",
        achieved_error=delta,
    )


def _gauss_legendre(
    integrand: Callable[[Any], Any],
    contour: ContourSpec,
    ctx: PrecisionContext,
    tol: Any,
    symmetric: bool,
    min_nodes: int = 0,
) -> LineIntegral:
    mp = ctx.mp
    c = ctx.real(contour.abscissa_c)
    height = ctx.real(contour.height_T)
    _check_height(integrand, contour, ctx, height, tol, symmetric)
    panels = max(8, contour.nodes // 16, int(mp.ceil(height)), min_nodes)
    lower = mp.mpf(0) if symmetric else -height
    points = mp.linspace(lower, height, panels + 1)
    if symmetric:
        value, error = mp.quad(lambda t: 2 * mp.re(integrand(mp.mpc(c, t))), points,
                               method="gauss-legendre", error=True)
    else:
        value, error = mp.quad(lambda t: integrand(mp.mpc(c, t)), points,
                               method="gauss-legendre", error=True)
    value /= 2 * mp.pi
    error /= 2 * mp.pi
    if error > tol:
        raise QuadratureNonConvergence(
            f"Gauss-Legendre panels on Re(s) = {contour.abscissa_c} reached only {mp.nstr(error, 5)}",
            achieved_error=error,
        )
    return LineIntegral(value=value, error=error, height=height, nodes_used=panels)


def integrate_line(
    integrand: Callable[[Any], Any],
    contour: ContourSpec,
    ctx: PrecisionContext,
    *,
    strip: float,
    symmetric: bool = False,
    tolerance: Any = None,
    guard_bits: int = 0,
    min_nodes: int = 0,
) -> LineIntegral:
    """(1/2 pi i) * integral of integrand(s) over Re(s) = c, |Im(s)| <= T.

    ``strip`` is the half-width of the horizontal strip around the line in which
    the integrand is analytic; it sets the initial trapezoid step. With
    ``symmetric=True`` the integrand must satisfy f(conj s) = conj f(s) and the
    result is real. ``min_nodes`` keeps refining until at least that many nodes
    (trapezoid) or panels (Gauss-Legendre) have been used.
    """
    mp = ctx.mp
    tol = ctx.tail() if tolerance is None else tolerance
    with mp.extraprec(guard_bits):
        if contour.rule is QuadratureRule.GAUSS_LEGENDRE_PANELS:
            result = _gauss_legendre(integrand, contour, ctx, tol, symmetric, min_nodes)
        else:
            result = _trapezoid(integrand, contour, ctx, strip, tol, symmetric, ctx.quad_max_refinements, min_nodes)
    result.value = +result.value
    return result


def strip_half_width(c: Fraction, singularities: list[Fraction]) -> float:
    """0.9 times the distance from c to the nearest singularity on the real axis."""
    distance = min(abs(Fraction(c) - point) for point in singularities)
    return 0.9 * float(distance)


# ---------------------------------------------------------------------------
# Mellin-Barnes oracles
# ---------------------------------------------------------------------------


def mellin_barnes_K(z_order: Any, x: Any, contour: ContourSpec, ctx: PrecisionContext) -> Any:
    """K_nu(x) = (1/2 pi i) int Gamma((s-nu)/2) Gamma((s+nu)/2) 2^(s-2) x^(-s) ds."""
    mp = ctx.mp
    nu = mp.mpmathify(z_order)
    x = mp.mpmathify(x)
    c = contour.abscissa_c
    if c <= abs(float(mp.re(nu))):
        raise BesselDomainError(f"contour abscissa {c} must exceed |Re(nu)| = {mp.nstr(abs(mp.re(nu)), 8)}")
    if mp.re(x) <= 0:
        raise BesselDomainError("mellin_barnes_K requires Re(x) > 0")
    log_x = mp.log(x)

    def integrand(s: Any) -> Any:
        return mp.gamma((s - nu) / 2) * mp.gamma((s + nu) / 2) * mp.power(2, s - 2) * mp.exp(-s * log_x)

    # poles of the gamma pair sit at s = +-nu - 2k
    order = Fraction(float(mp.re(nu))).limit_denominator(10**6)
    poles = [order, -order]
    real_input = mp.im(x) == 0 and mp.im(nu) == 0
    result = integrate_line(integrand, contour, ctx, strip=strip_half_width(c, poles), symmetric=real_input)
    return result.value


def mellin_barnes_contour(z_order: Any, x: Any, ctx: PrecisionContext, *, c: Fraction = Fraction(3, 2)) -> ContourSpec:
    """Contour whose height is set by the actual integrand magnitude of mellin_barnes_K."""
    mp = ctx.mp
    nu = mp.mpmathify(z_order)
    log_x = mp.log(mp.mpmathify(x))
    cc = ctx.real(c)

    def envelope(t: Any) -> Any:
        s = mp.mpc(cc, t)
        head = abs(mp.gamma((s - nu) / 2) * mp.gamma((s + nu) / 2) * mp.power(2, s - 2) * mp.exp(-s * log_x))
        s = mp.mpc(cc, -t)
        tail = abs(mp.gamma((s - nu) / 2) * mp.gamma((s + nu) / 2) * mp.power(2, s - 2) * mp.exp(-s * log_x))
        return 2 * max(head, tail)

    return build_contour(ctx, c, envelope)


def meijer_G_term(
    field: FieldDescriptor,
    x: Any,
    j: int,
    contour: ContourSpec,
    ctx: PrecisionContext,
) -> Any:
    """Single-j Meijer-G value: prefactor * (1/2 pi i) int G(s) (x j)^(-s) ds.

    Multiplying by ``omega_normalization`` gives the j-th summand of the kernel:
    e^(-jx) for Q, K_0(2e sqrt(jx)) + K_0(2e' sqrt(jx)) for real quadratic fields.
    """
    mp = ctx.mp
    if j < 1:
        raise ValueError("meijer_G_term expects j >= 1")
    x = mp.mpmathify(x)
    if mp.re(x) <= 0:
        raise BesselDomainError("meijer_G_term requires Re(x) > 0")
    c = contour.abscissa_c
    if field.r1 == 0 and contour.cos_clearance() <= 0.05:
        raise ValueError(f"|cos(pi c / 2)| at c = {c} is too small for a 1/cos integrand")
    log_y = mp.log(x * j)

    def integrand(s: Any) -> Any:
        return gamma_factor(field, s, ctx) * mp.exp(-s * log_y)

    singularities = [Fraction(0)]
    if field.r1 == 0:
        nearest_odd = 2 * math.floor(float(c) / 2) + 1
        singularities += [Fraction(nearest_odd), Fraction(nearest_odd + 2)]
    result = integrate_line(
        integrand, contour, ctx,
        strip=strip_half_width(c, singularities),
        symmetric=mp.im(x) == 0,
    )
    value = mp.re(result.value) if mp.im(x) == 0 else result.value
    return meijer_prefactor(field, ctx) * value


__all__ = [
    "BesselDomainError",
    "LineIntegral",
    "PoleError",
    "asymptotic_regime_applies",
    "bessel_K",
    "build_contour",
    "complex_gamma",
    "gamma_factor",
    "integrate_line",
    "meijer_G_term",
    "meijer_prefactor",
    "mellin_barnes_K",
    "mellin_barnes_contour",
    "omega_normalization",
    "strip_half_width",
]
