from __future__ import annotations

import logging
import random
import time
from typing import Callable, Iterable, Optional, TypeVar

T = TypeVar("T")

logger = logging.getLogger(__name__)


def execute_with_retry(
    func: Callable[[int], T],
    *,
    max_attempts: int = 3,
    base_delay: float = 1.5,
    cap_seconds: float = 30.0,
    jitter: bool = True,
    retry_exceptions: Iterable[type[BaseException]] = (Exception,),
    non_retry_exceptions: Iterable[type[BaseException]] = (),
    on_retry: Optional[Callable[[int, BaseException], None]] = None,
) -> T:
    """
    Execute callable with retry logic and exponential backoff.

    Args:
        func: Callable to execute; receives the zero-based attempt number.
        max_attempts: Total attempts before giving up (must be >= 1).
        base_delay: Base delay factor for exponential backoff; 0 disables sleeping.
        cap_seconds: Maximum delay between attempts.
        jitter: Whether to apply random jitter (80%-120%) to delay.
        retry_exceptions: Exception classes that trigger another attempt.
        non_retry_exceptions: Exception classes that are re-raised immediately.
        on_retry: Called with (failed attempt number, exception) before the next attempt.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    attempts = 0
    retry_tuple = tuple(retry_exceptions)
    non_retry_tuple = tuple(non_retry_exceptions)

    while True:
        try:
            return func(attempts)
        except non_retry_tuple:
            raise
        except retry_tuple as exc:
            attempts += 1
            if attempts >= max_attempts:
                raise
            logger.warning("Attempt %s of %s failed: %s", attempts, max_attempts, exc)
            if on_retry is not None:
                on_retry(attempts - 1, exc)

            if base_delay <= 0:
                continue
            delay = base_delay**attempts
            delay = min(delay, cap_seconds)
            if jitter:
                delay *= random.uniform(0.8, 1.2)
            time.sleep(delay)
