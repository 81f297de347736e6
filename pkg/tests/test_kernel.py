import pytest

from app.repositories.tables_repo import ingest_table
from app.services.fields import builtin_field
from app.services.kernel import (
    EvaluationSession,
    GeneralSignatureUnsupported,
    KernelDomainError,
    lambert_series,
    omega,
)
from models import CoefficientSource, FieldDescriptor, KernelMethod, PrecisionContext


def test_omega_for_rationals_at_log_two(ctx30, rational):
    result = omega(rational, ctx30.mp.log(2), ctx30)
    assert abs(result.value - 1) < 10 * ctx30.target()
    assert result.method is KernelMethod.CLOSED_FORM_Q
    assert result.certified


def test_omega_mellin_barnes_matches_closed_form(ctx, rational):
    mp = ctx.mp
    result = omega(rational, 1, ctx, method="mellin-barnes")
    assert result.method is KernelMethod.MELLIN_BARNES
    assert result.quadrature_error is not None
    assert abs(result.value - 1 / mp.expm1(1)) < 1e-12


@pytest.mark.parametrize("label", ["Qsqrt5", "Qi"])
def test_bessel_and_mellin_barnes_agree(ctx, label):
    field = builtin_field(label)
    session = EvaluationSession(field, ctx)
    bessel = omega(field, "1.5", ctx, method="bessel", session=session)
    contour = omega(field, "1.5", ctx, method="mellin-barnes", session=session)
    assert bessel.method in (KernelMethod.BESSEL_REAL_QUAD, KernelMethod.BESSEL_IMAG_QUAD)
    assert abs(bessel.value - contour.value) < 1e-11 * max(1, abs(bessel.value))


def test_omega_complex_argument_is_conjugate_symmetric(ctx, golden):
    mp = ctx.mp
    upper = omega(golden, mp.mpc(2, 1), ctx).value
    lower = omega(golden, mp.mpc(2, -1), ctx).value
    assert abs(upper - mp.conj(lower)) < 1e-13


def test_classical_lambert_values(ctx30, rational):
    mp = ctx30.mp
    fifth = lambert_series(rational, 5, 2 * mp.pi, ctx30)
    first = lambert_series(rational, 1, 2 * mp.pi, ctx30)
    assert abs(fifth.value - mp.mpf(1) / 504) < 10 * ctx30.target()
    assert abs(first.value - (mp.mpf(1) / 24 - 1 / (8 * mp.pi))) < 10 * ctx30.target()
    assert fifth.certified and first.certified


def test_lambert_negative_power_matches_zeta_three(ctx30, rational):
    mp = ctx30.mp
    result = lambert_series(rational, -3, 2 * mp.pi, ctx30)
    assert abs(result.value - (7 * mp.pi**3 / 360 - mp.zeta(3) / 2)) < 10 * ctx30.target()


def test_quadratic_lambert_equals_resummed_kernels(ctx, golden):
    mp = ctx.mp
    session = EvaluationSession(golden, ctx)
    y = mp.mpf(50)
    resummed = lambert_series(golden, 0, y, ctx, session=session)
    counts = session.counts(120)
    direct = mp.mpf(0)
    for n in range(1, 121):
        if counts[n]:
            direct += counts[n] * omega(golden, n * y / golden.disc_abs, ctx, session=session).value
    assert abs(resummed.value - direct) < 1e-12


def test_quadratic_lambert_matches_mellin_barnes(ctx, golden):
    session = EvaluationSession(golden, ctx)
    bessel = lambert_series(golden, 1, 8, ctx, session=session)
    contour = lambert_series(golden, 1, 8, ctx, method="mellin-barnes", session=session)
    assert abs(bessel.value - contour.value) < 1e-11 * max(1, abs(bessel.value))


def test_session_convolution_for_rationals(ctx, rational):
    session = EvaluationSession(rational, ctx)
    divisors = session.convolution(0, 12)
    sigma = session.convolution(1, 12)
    assert divisors[1:13] == [1, 2, 2, 3, 2, 4, 2, 4, 3, 4, 2, 6]
    assert sigma[12] == 28
    assert session.convolution(0, 10) is divisors


@pytest.mark.error
def test_kernel_domain_errors(ctx, rational, golden):
    with pytest.raises(KernelDomainError, match="Re"):
        omega(golden, -1, ctx)
    with pytest.raises(KernelDomainError, match="method"):
        omega(golden, 1, ctx, method="fourier")
    with pytest.raises(KernelDomainError, match="quadratic"):
        omega(rational, 1, ctx, method="bessel")
    with pytest.raises(KernelDomainError):
        lambert_series(golden, 1, 0, ctx)
    with pytest.raises(KernelDomainError, match="different field"):
        omega(golden, 1, ctx, session=EvaluationSession(rational, ctx))


@pytest.mark.error
def test_short_table_cannot_certify_a_contour(ctx):
    stub = FieldDescriptor("stub", 3, 1, 1, 108, -108, 1, "1.35", 2, CoefficientSource.EXTERNAL_TABLE,
                           coefficients=(1, 1, 1))
    with pytest.raises(GeneralSignatureUnsupported, match="too short"):
        omega(stub, 1, ctx)


@pytest.mark.error
def test_degree_cap(cubic_table):
    capped = PrecisionContext.from_digits(6, max_general_degree=2)
    with pytest.raises(GeneralSignatureUnsupported, match="exceeds"):
        omega(ingest_table(cubic_table), 1, capped)


@pytest.mark.slow
def test_cubic_kernel_by_mellin_barnes(cubic_table):
    ctx = PrecisionContext.from_digits(6)
    cubic = ingest_table(cubic_table)
    result = omega(cubic, 1, ctx)
    assert result.method is KernelMethod.MELLIN_BARNES
    assert result.certified
    assert result.quadrature_error <= ctx.tail()
    assert ctx.mp.im(result.value) == 0


def _assert_tail_certificate(first, doubled, ctx):
    assert doubled.terms_used >= 2 * first.terms_used
    roundoff = 64 * ctx.mp.eps * max(1, abs(first.value))
    assert abs(doubled.value - first.value) <= first.truncation_error_bound + roundoff


@pytest.mark.parametrize("label, x", [("Qsqrt5", "0.7"), ("Qi", "1.1"), ("Qsqrt5", "3"), ("Qi", "0.4")])
def test_doubling_terms_stays_inside_the_tail_bound(ctx, label, x):
    field = builtin_field(label)
    session = EvaluationSession(field, ctx)
    first = omega(field, x, ctx, session=session)
    assert first.certified
    doubled = omega(field, x, ctx, session=session, terms=2 * first.terms_used)
    assert doubled.terms_used == 2 * first.terms_used
    _assert_tail_certificate(first, doubled, ctx)


@pytest.mark.parametrize("label, a", [("Q", 5), ("Q", -3), ("Qsqrt5", 1), ("Qi", 0)])
def test_lambert_doubling_stays_inside_the_tail_bound(ctx, label, a):
    field = builtin_field(label)
    session = EvaluationSession(field, ctx)
    y = 2 * ctx.mp.pi
    first = lambert_series(field, a, y, ctx, session=session)
    doubled = lambert_series(field, a, y, ctx, session=session, terms=2 * first.terms_used)
    _assert_tail_certificate(first, doubled, ctx)


def test_forced_short_sum_reports_its_own_bound(ctx, golden):
    session = EvaluationSession(golden, ctx)
    full = omega(golden, 1, ctx, session=session)
    short = omega(golden, 1, ctx, session=session, terms=full.terms_used // 2)
    assert short.terms_used == full.terms_used // 2
    assert short.truncation_error_bound >= full.truncation_error_bound
    assert abs(full.value - short.value) <= short.truncation_error_bound


@pytest.mark.error
def test_terms_override_must_be_positive(ctx, golden):
    with pytest.raises(KernelDomainError, match="terms"):
        omega(golden, 1, ctx, terms=0)
    with pytest.raises(KernelDomainError, match="terms"):
        lambert_series(golden, 1, 1, ctx, terms=-4)


@pytest.mark.slow
def test_cubic_kernel_doubling_nodes_stays_inside_the_bound(cubic_table):
    ctx = PrecisionContext.from_digits(6)
    cubic = ingest_table(cubic_table)
    session = EvaluationSession(cubic, ctx)
    first = omega(cubic, 1, ctx, session=session)
    doubled = omega(cubic, 1, ctx, session=session, terms=2 * first.terms_used)
    assert doubled.method is KernelMethod.MELLIN_BARNES
    _assert_tail_certificate(first, doubled, ctx)
