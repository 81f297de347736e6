import random
from dataclasses import replace
from fractions import Fraction

import pytest

from app.services.errors import ContourHeightError
from app.services.special import (
    BesselDomainError,
    PoleError,
    _k0_asymptotic,
    _k0_series,
    asymptotic_regime_applies,
    bessel_K,
    build_contour,
    complex_gamma,
    gamma_factor,
    meijer_G_term,
    mellin_barnes_K,
    mellin_barnes_contour,
    omega_normalization,
    strip_half_width,
)
from models import ContourError, ContourSpec, PrecisionContext, QuadratureRule


def _meijer_contour(field, x, j, ctx):
    mp = ctx.mp
    log_y = mp.log(mp.mpf(x) * j)
    c = mp.mpf(3) / 2

    def envelope(t):
        s = mp.mpc(c, t)
        return 2 * abs(gamma_factor(field, s, ctx) * mp.exp(-s * log_y))

    return build_contour(ctx, Fraction(3, 2), envelope)


def test_gamma_reflection_and_duplication(ctx30):
    mp = ctx30.mp
    rng = random.Random(20240611)
    tolerance = 100 * ctx30.target()
    for _ in range(100):
        s = mp.mpc(rng.uniform(0.1, 5), rng.uniform(-20, 20))
        reflected = complex_gamma(s, ctx30) * complex_gamma(1 - s, ctx30)
        expected = mp.pi / mp.sinpi(s)
        assert abs(reflected - expected) <= tolerance * abs(expected), s
        duplicated = complex_gamma(s, ctx30) * complex_gamma(s + mp.mpf(1) / 2, ctx30)
        expected = mp.power(2, 1 - 2 * s) * mp.sqrt(mp.pi) * complex_gamma(2 * s, ctx30)
        assert abs(duplicated - expected) <= tolerance * abs(expected), s


@pytest.mark.error
@pytest.mark.parametrize("s", [0, -3, "-7"])
def test_gamma_poles(ctx, s):
    with pytest.raises(PoleError):
        complex_gamma(s, ctx)


@pytest.mark.parametrize("z", ["0.05", "0.5", "3", "12"])
def test_k0_series_matches_mpmath(ctx30, z):
    mp = ctx30.mp
    expected = mp.besselk(0, mp.mpf(z))
    assert abs(bessel_K(0, z, ctx30, regime="series") - expected) < 10 * ctx30.target() * expected


def test_k0_regimes_agree_past_crossover(ctx):
    mp = ctx.mp
    expected = mp.besselk(0, 40)
    assert asymptotic_regime_applies(40, ctx)
    for regime in ("auto", "series", "asymptotic"):
        assert abs(bessel_K(0, 40, ctx, regime=regime) - expected) < 10 * ctx.target() * expected


@pytest.mark.parametrize(("re", "im"), [(8, 0), (9, 0), (10, 0), ("9.5", "0.5")])
def test_k0_series_and_asymptotic_agree_near_the_crossover(ctx, re, im):
    """Below the crossover the asymptotic expansion is only good to its smallest term."""
    mp = ctx.mp
    z = mp.mpc(re, im) if im else mp.mpf(re)
    series = _k0_series(z, ctx)
    asymptotic, error = _k0_asymptotic(z, ctx)
    assert error <= mp.exp(-2 * abs(z) + 4) * abs(series)
    assert abs(series - asymptotic) <= 2 * error + 10 * ctx.target() * abs(series)
    assert abs(series - mp.besselk(0, z)) <= 10 * ctx.target() * abs(series)


@pytest.mark.parametrize("digits", [15, 20])
def test_k0_series_and_asymptotic_agree_to_target_at_thirty(digits):
    ctx = PrecisionContext.from_digits(digits)
    mp = ctx.mp
    series = _k0_series(mp.mpf(30), ctx)
    asymptotic, error = _k0_asymptotic(mp.mpf(30), ctx)
    assert error <= ctx.target() * series
    assert abs(series - asymptotic) <= 10 * ctx.target() * series


def test_crossover_moves_with_precision(ctx, ctx30):
    assert asymptotic_regime_applies(40, ctx)
    assert not asymptotic_regime_applies(40, ctx30)


def test_k0_complex_argument(ctx30):
    mp = ctx30.mp
    z = mp.mpc(3, 4)
    assert abs(bessel_K(0, z, ctx30) - mp.besselk(0, z)) < 10 * ctx30.target() * abs(mp.besselk(0, z))


def test_k_half_closed_form(ctx30):
    mp = ctx30.mp
    value = bessel_K(Fraction(1, 2), 2, ctx30)
    assert abs(value - mp.sqrt(mp.pi / 4) * mp.exp(-2)) < 10 * ctx30.target()
    assert abs(value - mp.besselk(mp.mpf(1) / 2, 2)) < 10 * ctx30.target()


@pytest.mark.error
def test_bessel_domain_errors(ctx):
    with pytest.raises(BesselDomainError, match="Re"):
        bessel_K(0, -1, ctx)
    with pytest.raises(BesselDomainError, match="nu"):
        bessel_K(1, 1, ctx)
    with pytest.raises(ValueError):
        bessel_K(0, 1, ctx, regime="fast")


@pytest.mark.parametrize("x", ["0.5", "2", "5"])
def test_mellin_barnes_k0(ctx, x):
    mp = ctx.mp
    contour = mellin_barnes_contour(0, x, ctx)
    value = mellin_barnes_K(0, x, contour, ctx)
    expected = mp.besselk(0, mp.mpf(x))
    assert abs(value - expected) < 1e-12 * expected


def test_mellin_barnes_half_order_with_panels(ctx):
    mp = ctx.mp
    contour = replace(mellin_barnes_contour("0.5", 2, ctx), rule=QuadratureRule.GAUSS_LEGENDRE_PANELS)
    value = mellin_barnes_K("0.5", 2, contour, ctx)
    assert abs(value - mp.sqrt(mp.pi / 4) * mp.exp(-2)) < 1e-12


@pytest.mark.error
def test_mellin_barnes_requires_abscissa_past_poles(ctx):
    with pytest.raises(BesselDomainError, match="abscissa"):
        mellin_barnes_K(2, 1, ContourSpec(abscissa_c=Fraction(3, 2), height_T=10), ctx)


def test_meijer_term_for_rationals_is_exponential(ctx, rational):
    mp = ctx.mp
    x = mp.log(2)
    for j in (1, 2, 3):
        contour = _meijer_contour(rational, x, j, ctx)
        value = meijer_G_term(rational, x, j, contour, ctx) * omega_normalization(rational, ctx)
        assert abs(value - mp.exp(-j * x)) < 1e-12


def test_meijer_term_for_real_quadratic_is_bessel_pair(ctx, golden):
    mp = ctx.mp
    x = mp.mpf("0.7")
    for j in (1, 2):
        contour = _meijer_contour(golden, x, j, ctx)
        value = meijer_G_term(golden, x, j, contour, ctx) * omega_normalization(golden, ctx)
        argument = 2 * mp.expjpi(mp.mpf(1) / 4) * mp.sqrt(j * x)
        expected = 2 * mp.re(mp.besselk(0, argument))
        assert abs(value - expected) < 1e-12


@pytest.mark.error
def test_meijer_term_rejects_bad_input(ctx, rational, gaussian):
    contour = ContourSpec(abscissa_c=Fraction(3, 2), height_T=20)
    with pytest.raises(ValueError, match="j >= 1"):
        meijer_G_term(rational, 1, 0, contour, ctx)
    with pytest.raises(BesselDomainError):
        meijer_G_term(rational, -1, 1, contour, ctx)
    with pytest.raises(ValueError, match="cos"):
        meijer_G_term(gaussian, 1, 1, ContourSpec(abscissa_c=Fraction(301, 100), height_T=20), ctx)


@pytest.mark.error
def test_contour_height_error(ctx):
    with pytest.raises(ContourHeightError):
        build_contour(ctx, Fraction(3, 2), lambda t: ctx.mp.mpf(1))


@pytest.mark.error
def test_contour_spec_validation():
    with pytest.raises(ContourError, match="abscissa"):
        ContourSpec(abscissa_c=1, height_T=10)
    with pytest.raises(ContourError, match="nodes"):
        ContourSpec(abscissa_c=Fraction(3, 2), height_T=10, nodes=8)


def test_strip_half_width():
    assert strip_half_width(Fraction(3, 2), [Fraction(0)]) == pytest.approx(1.35)
    assert strip_half_width(Fraction(5, 2), [Fraction(0), Fraction(3)]) == pytest.approx(0.45)
