from __future__ import annotations

from typing import Any, Iterable, Optional

from fspec.models import SourceSpan


class SpecError(ValueError):
    """Base class of every error reported against a specification file."""

    def __init__(self, message: str, span: Optional[SourceSpan] = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span}: {self.message}"

    def __reduce__(self) -> tuple[Any, ...]:
        # Subclasses take different constructor arguments; rebuild from state.
        return (_rebuild_error, (type(self), self.__dict__.copy()))


def _rebuild_error(cls: type[SpecError], state: dict[str, Any]) -> SpecError:
    error = cls.__new__(cls)
    Exception.__init__(error, state.get("message", ""))
    error.__dict__.update(state)
    return error


# --- static errors --------------------------------------------------------


class LexError(SpecError):
    pass


class ParseError(SpecError):
    def __init__(self, span: SourceSpan, found: str, expected: Iterable[str],
                 message: Optional[str] = None) -> None:
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        if message is None:
            wanted = ", ".join(self.expected) if self.expected else "nothing"
            message = f"unexpected {found}, expected one of: {wanted}"
        super().__init__(message, span)


class SpecTypeError(SpecError):
    pass


class MissingDecreases(SpecTypeError):
    def __init__(self, name: str, span: Optional[SourceSpan]) -> None:
        self.name = name
        super().__init__(f"recursive {name} needs a decreases clause", span)


class UnknownConstant(SpecError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"no unspecified constant named {name}")


class TheoremFailed(SpecError):
    def __init__(self, name: str, span: Optional[SourceSpan] = None) -> None:
        self.name = name
        super().__init__(f"theorem {name} is false", span)


class UnknownPredicate(SpecError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"no predicate named {name}")


class ArityMismatch(SpecError):
    pass


class CardinalityOverflow(SpecError):
    pass


# --- runtime errors -------------------------------------------------------


class EvaluationError(SpecError):
    """A violated annotation or an undefined operation detected while running.

    ``annotation`` holds the pretty-printed phrase being evaluated (for
    example ``ensures result = gcd(m, n);``) and ``reason`` the sentence
    explaining what went wrong.
    """

    def __init__(
        self,
        reason: str,
        span: Optional[SourceSpan] = None,
        annotation: Optional[str] = None,
    ) -> None:
        super().__init__(reason, span)
        self.reason = reason
        self.annotation = annotation

    def at(self, span: Optional[SourceSpan], annotation: Optional[str]) -> "EvaluationError":
        """Attach location information unless an inner phrase already did."""
        if self.annotation is None:
            self.annotation = annotation
            self.span = span
        return self


class PreconditionViolated(EvaluationError):
    def __init__(self, callee: str, args: str, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.callee = callee
        self.args = args
        super().__init__(f"precondition of {callee} is violated by arguments ({args})",
                         span, annotation)


class PostconditionViolated(EvaluationError):
    def __init__(self, op: str, args: str, result: str, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.op = op
        self.args = args
        self.result = result
        super().__init__(f"postcondition is violated by result {result}", span, annotation)


class InvariantViolated(EvaluationError):
    def __init__(self, iteration: int, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.iteration = iteration
        if iteration == 0:
            where = "before the first iteration"
        else:
            where = f"after iteration {iteration}"
        super().__init__(f"loop invariant is violated {where}", span, annotation)


class MeasureNegative(EvaluationError):
    def __init__(self, value: int, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.value = value
        super().__init__(f"termination measure {value} is negative", span, annotation)


class MeasureNotDecreased(EvaluationError):
    def __init__(self, before: int, after: int, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.before = before
        self.after = after
        super().__init__(
            f"termination measure is not decreased (from {before} to {after})",
            span, annotation,
        )


class AssertionFailed(EvaluationError):
    def __init__(self, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        super().__init__("assertion is violated", span, annotation)


class NoChoice(EvaluationError):
    def __init__(self, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        super().__init__("no value satisfies the choice condition", span, annotation)


class RangeError(EvaluationError):
    def __init__(self, value: str, type_name: str, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.value = value
        self.type_name = type_name
        super().__init__(f"value {value} is not in type {type_name}", span, annotation)


class DivisionByZero(EvaluationError):
    def __init__(self, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        super().__init__("division by zero", span, annotation)


class Overflow(EvaluationError):
    def __init__(self, detail: str = "integer value too large", span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        super().__init__(detail, span, annotation)


class TheoremViolated(EvaluationError):
    def __init__(self, name: str, args: str, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        self.name = name
        self.args = args
        super().__init__(f"theorem {name} is violated by arguments ({args})", span, annotation)


class RecursionTooDeep(EvaluationError):
    def __init__(self, span: Optional[SourceSpan] = None,
                 annotation: Optional[str] = None) -> None:
        super().__init__("recursion is too deep to evaluate", span, annotation)


class Inadmissible(Exception):
    """Raised when a top-level input does not satisfy the operation's precondition."""
