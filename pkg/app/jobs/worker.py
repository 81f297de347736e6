from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from config.settings import get_settings
from app.services.errors import NumericalConvergenceError
from app.services.identities import run_identity
from app.services.kernel import EvaluationSession
from app.utils.retry import execute_with_retry
from models import PrecisionContext, VerificationReport

from .queue import InMemoryJobQueue, VerificationJob

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class JobResult:
    job: VerificationJob
    success: bool
    report: Optional[VerificationReport] = None
    error: Optional[str] = None
    non_convergence: bool = False
    attempts: int = 0
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.success and self.report is not None and self.report.passed


def _process_attempt(job: VerificationJob, attempt: int) -> VerificationReport:
    ctx = PrecisionContext.from_digits(job.digits)
    if attempt:
        ctx = ctx.escalated(attempt * get_settings().ESCALATION_BITS)
        logger.info("Retrying %s with %s working bits", job.key, ctx.working_bits)
    session = EvaluationSession(job.field, ctx)
    return run_identity(job.identity_id, job.field, job.params_dict(), ctx, session=session)


def process_verification_job(job: VerificationJob) -> JobResult:
    """Run one job; numerical failures are retried with more working bits."""
    settings = get_settings()
    attempts = 0
    started = time.perf_counter()

    def attempt(number: int) -> VerificationReport:
        nonlocal attempts
        attempts = number + 1
        return _process_attempt(job, number)

    try:
        report = execute_with_retry(
            attempt,
            max_attempts=max(1, settings.ESCALATION_ATTEMPTS),
            base_delay=0,
            jitter=False,
            retry_exceptions=(NumericalConvergenceError,),
            non_retry_exceptions=(ValueError,),
        )
    except NumericalConvergenceError as exc:
        logger.warning("No convergence for %s after %s attempt(s): %s", job.key, attempts, exc)
        return JobResult(job, False, error=str(exc), non_convergence=True, attempts=attempts,
                         elapsed=time.perf_counter() - started)
    except ValueError as exc:
        logger.warning("Rejected %s: %s", job.key, exc)
        return JobResult(job, False, error=str(exc), attempts=attempts, elapsed=time.perf_counter() - started)
    except Exception as exc:  # pragma: no cover - unexpected
        logger.exception("Failed to process %s", job.key)
        return JobResult(job, False, error=str(exc), attempts=attempts, elapsed=time.perf_counter() - started)

    elapsed = time.perf_counter() - started
    logger.info("Finished %s in %.2fs", job.key, elapsed)
    return JobResult(job, True, report=report, attempts=attempts, elapsed=elapsed)


def _drain(job_queue: InMemoryJobQueue, results: list[JobResult]) -> None:
    while True:
        job = job_queue.dequeue()
        if job is None:
            return
        try:
            results.append(process_verification_job(job))
        finally:
            job_queue.ack(job)


def run_sweep(jobs: Sequence[VerificationJob], workers: Optional[int] = None) -> list[JobResult]:
    """Process jobs concurrently; results come back sorted by (identity, field, params)."""
    count = workers or get_settings().SWEEP_WORKERS
    job_queue = InMemoryJobQueue()
    for job in jobs:
        job_queue.enqueue(job)
    results: list[JobResult] = []
    logger.info("Running %s job(s) on %s worker(s)", len(jobs), count)
    with ThreadPoolExecutor(max_workers=max(1, count)) as executor:
        futures = [executor.submit(_drain, job_queue, results) for _ in range(max(1, count))]
        for future in futures:
            future.result()
    return sorted(results, key=lambda result: result.job.key)


__all__ = ["JobResult", "process_verification_job", "run_sweep"]
