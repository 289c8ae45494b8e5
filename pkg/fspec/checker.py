"""Exhaustive checking of one operation over all of its inputs."""
from __future__ import annotations

import itertools
import logging
import math
import multiprocessing
import sys
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, TextIO

from fspec.errors import EvaluationError, Inadmissible, RecursionTooDeep
from fspec.evaluator import END, EvalMode, invoke_operation
from fspec.printer import pretty_print
from fspec.reader import parse_source
from fspec.report import (
    ERROR_FOOTER,
    IGNORING_INADMISSIBLE,
    NONDET_NOTE,
    CheckReport,
    InputResult,
    Outcome,
    OutcomeTally,
    format_completion,
    format_error,
    format_header,
    format_progress,
)
from fspec.semantics import resolve_constants, typecheck_spec
from fspec.semtypes import TupleType, cardinality
from fspec.typed import ConstEnv, TOperation, TypedSpec
from fspec.values import LazySeq, Value, enumerate_type, format_args, format_value, nth_value

LOG = logging.getLogger(__name__)

# Upper bound on the inputs one worker claims at a time.
MAX_CHUNK = 256

# Each level of a recursive operation costs several interpreter frames.
RECURSION_LIMIT = 20000


def raise_recursion_limit(limit: int = RECURSION_LIMIT) -> None:
    if sys.getrecursionlimit() < limit:
        sys.setrecursionlimit(limit)


@dataclass(frozen=True)
class CheckOptions:
    operation: str
    mode: EvalMode = EvalMode.DETERMINISTIC
    silent: bool = False
    workers: int = 1
    progress_every: int = 0
    chunk_size: Optional[int] = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.progress_every < 0:
            raise ValueError(f"progress interval must not be negative, got {self.progress_every}")
        if self.chunk_size is not None and self.chunk_size < 1:
            raise ValueError(f"chunk size must be at least 1, got {self.chunk_size}")


@dataclass(frozen=True)
class SourceText:
    """Specification text that worker processes re-elaborate on start-up."""

    text: str
    filename: str


def input_count(op: TOperation) -> int:
    """Number of argument tuples of ``op``; raises CardinalityOverflow when too large."""
    return cardinality(TupleType(op.param_types))


def enumerate_inputs(op: TOperation, consts: Optional[ConstEnv] = None) -> LazySeq[tuple[Value, ...]]:
    """All argument tuples of ``op`` in canonical order, last parameter fastest.

    ``consts`` is accepted for symmetry with the other entry points; parameter
    types are already resolved against the constants of the typed spec.
    """
    input_count(op)
    domains = [enumerate_type(t) for t in op.param_types]
    return LazySeq(lambda: itertools.product(*domains))


def nth_input(op: TOperation, index: int) -> tuple[Value, ...]:
    value = nth_value(TupleType(op.param_types), index)
    assert isinstance(value, tuple)
    return value


def partition_work(total: int, workers: int, chunk_size: Optional[int] = None) -> list[range]:
    """Split ``[0, total)`` into contiguous chunks claimed one at a time by workers."""
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if total <= 0:
        return []
    if chunk_size is None:
        if workers == 1:
            return [range(0, total)]
        # Several chunks per worker keep the pool busy when inputs differ in cost.
        chunk_size = max(1, min(MAX_CHUNK, math.ceil(total / (workers * 4))))
    return [range(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def run_input(op: TOperation, index: int, args: tuple[Value, ...], mode: EvalMode) -> InputResult:
    """Invoke ``op`` on one input and buffer its transcript lines."""
    lines: list[str] = []
    kind = op.kind.value
    call = f"{op.name}({format_args(args)})"
    start = time.perf_counter()

    def elapsed() -> int:
        return int((time.perf_counter() - start) * 1000)

    try:
        if mode is EvalMode.DETERMINISTIC:
            lines.append(f"Run {index} of deterministic {kind} {call}:")
            result = invoke_operation(op, args, mode, sink=lines.append).first()
            lines.append(f"Result ({elapsed()} ms): {format_value(result)}")
        else:
            branches = iter(invoke_operation(op, args, mode, sink=lines.append))
            for branch in itertools.count():
                lines.append(f"Branch {branch}:{index} of nondeterministic {kind} {call}:")
                value = next(branches, END)
                if value is END:
                    lines.append(f"No more results ({elapsed()} ms).")
                    break
                lines.append(f"Result ({elapsed()} ms): {format_value(value)}")
    except Inadmissible:
        return InputResult(index, args, Outcome.INADMISSIBLE)
    except EvaluationError as error:
        return InputResult(index, args, Outcome.FAILED, tuple(lines), error)
    except RecursionError:
        return InputResult(index, args, Outcome.FAILED, tuple(lines), RecursionTooDeep())
    return InputResult(index, args, Outcome.CHECKED, tuple(lines))


def _sequential(op: TOperation, opts: CheckOptions) -> Iterator[InputResult]:
    for index, args in enumerate(enumerate_inputs(op)):
        yield run_input(op, index, args, opts.mode)


# --- worker processes ----------------------------------------------------------

_worker_op: Optional[TOperation] = None
_worker_mode = EvalMode.DETERMINISTIC


def _init_worker(source: SourceText, unspecified: dict[str, int], name: str, mode: EvalMode) -> None:
    global _worker_op, _worker_mode
    raise_recursion_limit()
    spec = parse_source(source.text, source.filename)
    typed = typecheck_spec(spec, resolve_constants(spec, unspecified))
    _worker_op = typed.operation(name)
    _worker_mode = mode


def _run_chunk(chunk: range) -> list[InputResult]:
    assert _worker_op is not None, "worker was not initialized"
    results = []
    for index in chunk:
        result = run_input(_worker_op, index, nth_input(_worker_op, index), _worker_mode)
        results.append(result)
        if result.outcome is Outcome.FAILED:
            break
    return results


def _parallel(typed: TypedSpec, op: TOperation, opts: CheckOptions,
              source: Optional[SourceText], total: int) -> Iterator[InputResult]:
    if source is None:
        source = SourceText(pretty_print(typed.spec), op.span.file)
    chunks = partition_work(total, opts.workers, opts.chunk_size)
    LOG.debug("checking %s with %d workers over %d chunks", op.name, opts.workers, len(chunks))
    init_args = (source, dict(typed.consts.unspecified), op.name, opts.mode)
    with multiprocessing.Pool(opts.workers, initializer=_init_worker, initargs=init_args) as pool:
        # Ordered delivery makes the first failure seen the one with the least index;
        # leaving the block terminates workers still busy past it.
        for results in pool.imap(_run_chunk, chunks):
            LOG.debug("chunk of %d results received", len(results))
            yield from results


# --- driver --------------------------------------------------------------------


def check_operation(
    typed: TypedSpec,
    consts: Optional[ConstEnv],
    opts: CheckOptions,
    out: Optional[TextIO] = None,
    *,
    source: Optional[SourceText] = None,
) -> CheckReport:
    """
    Run ``opts.operation`` on every input and print the transcript to ``out``.

    Evaluation stops at the first input (in canonical order) that violates
    an annotation; the failure is part of the returned report, not raised.

    Args:
        typed: The checked specification.
        consts: Constant values; defaults to those ``typed`` was built with.
        opts: Operation selection and run options.
        out: Transcript stream, standard output by default.
        source: Specification text for worker processes; the spec is
            pretty-printed when absent.

    Raises:
        KeyError: If ``opts.operation`` names no operation.
        CardinalityOverflow: If the inputs cannot be counted.
    """
    op = typed.operation(opts.operation)
    if consts is not None and consts.unspecified != typed.consts.unspecified:
        LOG.warning("constants differ from those the spec was checked with; using the latter")
    total = input_count(op)
    LOG.debug("selected %s (%s mode, %d inputs)", op.signature, opts.mode.value, total)

    def emit(line: str) -> None:
        print(line, file=out)

    emit(format_header(op.signature, total))
    started = time.perf_counter()
    tally = OutcomeTally(op.name, total)
    results: Iterable[InputResult]
    if opts.workers > 1 and total > 1:
        results = _parallel(typed, op, opts, source, total)
    else:
        results = _sequential(op, opts)

    for result in results:
        tally.consume(result)
        if not opts.silent:
            if result.outcome is Outcome.INADMISSIBLE and not tally.seen_inadmissible:
                emit(IGNORING_INADMISSIBLE)
                tally.seen_inadmissible = True
            for line in result.lines:
                emit(line)
        if tally.stopped:
            break
        if opts.progress_every and tally.processed % opts.progress_every == 0:
            emit(format_progress(tally))
    # Closes the worker pool if the loop stopped early.
    close = getattr(results, "close", None)
    if close is not None:
        close()

    nondet_note = opts.mode is EvalMode.DETERMINISTIC and op.nondet
    report = tally.report(int((time.perf_counter() - started) * 1000), nondet_note)
    if report.first_error is not None:
        for line in format_error(op.name, report.first_error):
            emit(line)
        emit(ERROR_FOOTER)
        return report
    emit(format_completion(report))
    if nondet_note:
        emit(NONDET_NOTE)
    return report
