"""Sweep job construction and processing for zetaforge."""

from .queue import InMemoryJobQueue, QueueOperationError, VerificationJob, build_verification_jobs
from .worker import JobResult, process_verification_job, run_sweep

__all__ = [
    "InMemoryJobQueue",
    "QueueOperationError",
    "VerificationJob",
    "build_verification_jobs",
    "JobResult",
    "process_verification_job",
    "run_sweep",
]
