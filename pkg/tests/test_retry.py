"""Backoff helper used by the worker's precision escalation."""
from __future__ import annotations

import pytest

from app.services.errors import QuadratureNonConvergence
from app.services.kernel import KernelDomainError
from app.utils.retry import execute_with_retry


@pytest.fixture()
def sleeps(monkeypatch):
    recorded = []
    monkeypatch.setattr("app.utils.retry.time.sleep", recorded.append)
    return recorded


def test_returns_first_success(sleeps):
    assert execute_with_retry(lambda attempt: attempt + 10) == 10
    assert sleeps == []


def test_retries_until_success(sleeps):
    seen = []

    def flaky(attempt):
        seen.append(attempt)
        if attempt < 2:
            raise QuadratureNonConvergence("not yet")
        return "done"

    assert execute_with_retry(flaky, max_attempts=3, base_delay=2.0, jitter=False) == "done"
    assert seen == [0, 1, 2]
    assert sleeps == [2.0, 4.0]


def test_delay_is_capped(sleeps):
    def always(attempt):
        raise QuadratureNonConvergence("stalled")

    with pytest.raises(QuadratureNonConvergence):
        execute_with_retry(always, max_attempts=4, base_delay=10.0, cap_seconds=30.0, jitter=False)
    assert sleeps == [10.0, 30.0, 30.0]


@pytest.mark.error
def test_gives_up_after_max_attempts(sleeps):
    calls = []

    def always(attempt):
        calls.append(attempt)
        raise QuadratureNonConvergence("stalled")

    with pytest.raises(QuadratureNonConvergence, match="stalled"):
        execute_with_retry(always, max_attempts=2, base_delay=0)
    assert calls == [0, 1]
    assert sleeps == []


@pytest.mark.error
def test_non_retry_exceptions_raise_immediately():
    calls = []

    def invalid(attempt):
        calls.append(attempt)
        raise KernelDomainError("Re(x) > 0 required")

    with pytest.raises(KernelDomainError):
        execute_with_retry(invalid, max_attempts=5, base_delay=0, non_retry_exceptions=(KernelDomainError,))
    assert calls == [0]


@pytest.mark.error
def test_unlisted_exceptions_are_not_retried():
    calls = []

    def broken(attempt):
        calls.append(attempt)
        raise KeyError("m")

    with pytest.raises(KeyError):
        execute_with_retry(broken, max_attempts=3, base_delay=0, retry_exceptions=(QuadratureNonConvergence,))
    assert calls == [0]


def test_on_retry_receives_failed_attempt():
    failures = []

    def flaky(attempt):
        if attempt == 0:
            raise QuadratureNonConvergence("first")
        return attempt

    result = execute_with_retry(flaky, base_delay=0, on_retry=lambda n, exc: failures.append((n, str(exc))))
    assert result == 1
    assert failures == [(0, "first")]


@pytest.mark.error
def test_rejects_zero_attempts():
    with pytest.raises(ValueError, match="at least 1"):
        execute_with_retry(lambda attempt: attempt, max_attempts=0)
