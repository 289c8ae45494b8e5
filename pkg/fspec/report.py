from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from fspec.errors import EvaluationError
from fspec.values import Value, format_args


class Outcome(Enum):
    CHECKED = "checked"
    INADMISSIBLE = "inadmissible"
    FAILED = "failed"


@dataclass(frozen=True)
class InputResult:
    """What happened to one input; ``lines`` is its buffered transcript."""

    index: int
    args: tuple[Value, ...]
    outcome: Outcome
    lines: tuple[str, ...] = ()
    error: Optional[EvaluationError] = None


@dataclass(frozen=True)
class FirstError:
    index: int
    args: tuple[Value, ...]
    error: EvaluationError


@dataclass
class CheckReport:
    operation: str
    total: int
    checked: int = 0
    inadmissible: int = 0
    first_error: Optional[FirstError] = None
    elapsed_ms: int = 0
    nondet_note: bool = False

    @property
    def ok(self) -> bool:
        return self.first_error is None

    @property
    def processed(self) -> int:
        return self.checked + self.inadmissible + (0 if self.first_error is None else 1)


@dataclass
class OutcomeTally:
    """
    Streaming count of input outcomes.

    Results must be consumed in input order; the first failure ends the
    tally and later results are ignored.
    """

    operation: str
    total: int
    checked: int = 0
    inadmissible: int = 0
    first_error: Optional[FirstError] = None
    seen_inadmissible: bool = field(default=False, repr=False)

    @property
    def processed(self) -> int:
        return self.checked + self.inadmissible + (0 if self.first_error is None else 1)

    @property
    def stopped(self) -> bool:
        return self.first_error is not None

    def consume(self, result: InputResult) -> None:
        if self.stopped:
            return
        if result.outcome is Outcome.CHECKED:
            self.checked += 1
        elif result.outcome is Outcome.INADMISSIBLE:
            self.inadmissible += 1
        else:
            if result.error is None:
                raise ValueError("a failed input must carry its error")
            self.first_error = FirstError(result.index, result.args, result.error)

    def report(self, elapsed_ms: int, nondet_note: bool = False) -> CheckReport:
        return CheckReport(
            operation=self.operation,
            total=self.total,
            checked=self.checked,
            inadmissible=self.inadmissible,
            first_error=self.first_error,
            elapsed_ms=elapsed_ms,
            nondet_note=nondet_note,
        )


# --- transcript lines ------------------------------------------------------------

IGNORING_INADMISSIBLE = "Ignoring inadmissible inputs..."
NONDET_NOTE = "Not all nondeterministic branches may have been considered."
ERROR_FOOTER = "ERROR encountered in execution."


def format_header(signature: str, total: int) -> str:
    return f"Executing {signature} with all {total} inputs."


def format_progress(tally: OutcomeTally) -> str:
    # Nothing is ever ignored; the column is kept for the familiar layout.
    return (
        f"{tally.processed} inputs ({tally.checked} checked, "
        f"{tally.inadmissible} inadmissible, 0 ignored)..."
    )


def format_completion(report: CheckReport) -> str:
    return (
        f"Execution completed for ALL inputs ({report.elapsed_ms} ms, "
        f"{report.checked} checked, {report.inadmissible} inadmissible)."
    )


def format_error(name: str, first: FirstError) -> list[str]:
    """The ``ERROR in execution of ...`` block, without the footer line."""
    error = first.error
    call = f"{name}({format_args(first.args)})"
    if error.annotation is None:
        return [f"ERROR in execution of {call}:", f"  {error.reason}"]
    location = "at unknown location:"
    if error.span is not None:
        location = f"at line {error.span.line} in file {error.span.file}:"
    return [
        f"ERROR in execution of {call}: evaluation of",
        f"  {error.annotation}",
        location,
        f"  {error.reason}",
    ]
