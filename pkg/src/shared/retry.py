"""Escalating re-attempts for fits that can be retried with more room.

The loop keeps the usual retry shape but never sleeps: a failed attempt is
followed by one with a larger degree cap and a higher working precision.
"""

from dataclasses import dataclass
from typing import Callable, Optional, TypeVar

from shared.logging import get_logger

T = TypeVar("T")

logger = get_logger("shared.retry")


@dataclass
class RetryConfig:
    max_attempts: int = 1
    degree_growth: int = 2
    precision_step_bits: int = 32


@dataclass(frozen=True)
class Attempt:
    number: int
    degree_cap: int
    precision_bits: int


def escalation_schedule(degree_cap: int, precision_bits: int, config: RetryConfig) -> list[Attempt]:
    if config.max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    return [
        Attempt(
            number=attempt,
            degree_cap=degree_cap * config.degree_growth ** (attempt - 1),
            precision_bits=precision_bits + config.precision_step_bits * (attempt - 1),
        )
        for attempt in range(1, config.max_attempts + 1)
    ]


def call_with_retry(
    operation_name: str,
    fn: Callable[[Attempt], T],
    is_retryable_exception: Callable[[Exception], bool],
    degree_cap: int,
    precision_bits: int,
    config: Optional[RetryConfig] = None,
) -> T:
    cfg = config or RetryConfig()
    schedule = escalation_schedule(degree_cap, precision_bits, cfg)

    for attempt in schedule:
        try:
            return fn(attempt)
        except Exception as exc:  # noqa: BLE001
            if not is_retryable_exception(exc) or attempt.number == cfg.max_attempts:
                raise
            logger.warning(
                "escalating_after_failure",
                extra={"extra": {
                    "operation": operation_name,
                    "attempt": attempt.number,
                    "degree_cap": attempt.degree_cap,
                    "precision_bits": attempt.precision_bits,
                    "error": str(exc),
                }},
            )

    raise RuntimeError(f"Retry loop exhausted unexpectedly for {operation_name}")
