from __future__ import annotations

import itertools
import logging
import queue
import threading
from dataclasses import dataclass
from typing import Optional

from app.services.fields import resolve_field
from app.services.identities import FIELD_FREE, PARAMETERS_BY_IDENTITY
from models import FieldDescriptor, IdentityId, RunConfig, RunConfigError

logger = logging.getLogger(__name__)


class QueueOperationError(RuntimeError):
    """Raised when an operation against the job queue fails."""


@dataclass(frozen=True)
class VerificationJob:
    """One identity at one field and one parameter point."""

    identity_id: IdentityId
    field: FieldDescriptor
    params: tuple[tuple[str, str], ...]
    digits: int

    @property
    def key(self) -> tuple[str, str, tuple[tuple[str, str], ...]]:
        return (self.identity_id.value, self.field.label, self.params)

    def params_dict(self) -> dict[str, str]:
        return dict(self.params)


def _grid_values(config: RunConfig, name: str) -> list[str]:
    return [str(value) for value in getattr(config.param_grid, name)]


def build_verification_jobs(config: RunConfig) -> list[VerificationJob]:
    """Expand identities x fields x parameter grid, keeping only the parameters each identity uses."""
    fields = [resolve_field(selector) for selector in config.field_selectors()]
    if not fields:
        raise RunConfigError("no field selected")
    jobs: dict[tuple[str, str, tuple[tuple[str, str], ...]], VerificationJob] = {}
    for identity in config.identity_set:
        names = PARAMETERS_BY_IDENTITY[identity]
        value_lists = []
        for name in names:
            values = _grid_values(config, name)
            if not values:
                raise RunConfigError(f"{identity.slug} needs at least one value for {name}")
            value_lists.append(values)
        targets = fields
        if identity in FIELD_FREE:
            targets = [field for field in fields if field.is_rational]
            if not targets:
                logger.warning("Skipping %s: it is stated over Q only", identity.slug)
                continue
        for field in targets:
            for combination in itertools.product(*value_lists):
                params = tuple(sorted(zip(names, combination)))
                job = VerificationJob(identity, field, params, config.precision_digits)
                jobs.setdefault(job.key, job)
    ordered = [jobs[key] for key in sorted(jobs)]
    logger.info("Built %s verification job(s)", len(ordered))
    return ordered


class InMemoryJobQueue:
    """Thread-safe FIFO of verification jobs."""

    def __init__(self) -> None:
        self._queue: "queue.Queue[VerificationJob]" = queue.Queue()
        self._in_flight = 0
        self._lock = threading.Lock()

    def enqueue(self, job: VerificationJob) -> None:
        self._queue.put(job)
        logger.debug("Enqueued %s", job.key)

    def dequeue(self, timeout: Optional[float] = None) -> Optional[VerificationJob]:
        """Return the next job, or None when the queue stays empty for ``timeout`` seconds."""
        try:
            job = self._queue.get(timeout=timeout) if timeout else self._queue.get_nowait()
        except queue.Empty:
            return None
        with self._lock:
            self._in_flight += 1
        return job

    def ack(self, job: VerificationJob) -> None:
        with self._lock:
            if self._in_flight == 0:
                raise QueueOperationError(f"ack without a dequeued job: {job.key}")
            self._in_flight -= 1
        self._queue.task_done()

    @property
    def pending(self) -> int:
        return self._queue.qsize()

    @property
    def in_flight(self) -> int:
        with self._lock:
            return self._in_flight
