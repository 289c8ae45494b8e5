import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Callable, NoReturn, Optional, Sequence

from fspec.checker import CheckOptions, SourceText, check_operation, raise_recursion_limit
from fspec.errors import SpecError
from fspec.evaluator import EvalMode
from fspec.printer import pretty_print
from fspec.reader import parse_source, read_source
from fspec.scaffold import extend_spec, render_validation_theorems, skeleton_from_spec
from fspec.semantics import DEFAULT_CONSTANT, resolve_constants, typecheck_spec
from fspec.typed import TypedSpec
from fspec.values import format_value

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_STATIC_ERROR = 2
EXIT_USAGE = 3

WATCH_INTERVAL = 1.0


class _ArgumentParser(argparse.ArgumentParser):
    """Reports malformed command lines with the usage exit code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def parse_constant(value: str) -> tuple[str, int]:
    """``N=20`` -> ``("N", 20)``."""
    name, sep, number = value.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {value!r}")
    try:
        amount = int(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value of {name} is not an integer: {number!r}") from None
    if amount < 0:
        raise argparse.ArgumentTypeError(f"value of {name} must not be negative: {amount}")
    return name.strip(), amount


def _natural(value: str) -> int:
    amount = int(value)
    if amount < 0:
        raise argparse.ArgumentTypeError(f"must not be negative: {amount}")
    return amount


def _positive(value: str) -> int:
    amount = int(value)
    if amount < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {amount}")
    return amount


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="fspec", description="Check finite-model specifications")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    def with_file(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("file", type=Path, help="The specification file")
        return sub

    def with_constants(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--const",
            action="extend",
            nargs="+",
            type=parse_constant,
            default=[],
            metavar="NAME=VALUE",
            help="Value of an unspecified constant (repeatable)",
        )
        sub.add_argument(
            "--default",
            type=_natural,
            default=DEFAULT_CONSTANT,
            help=f"Value of constants not given with --const (default {DEFAULT_CONSTANT})",
        )

    with_file("parse", "Parse and print the specification in canonical form")
    typecheck = with_file("typecheck", "Resolve constants and type-check")
    with_constants(typecheck)
    list_ops = with_file("list-ops", "List the operations that take parameters")
    with_constants(list_ops)

    for name, help_text in (("check", "Check an operation on all inputs"),
                            ("run", "Like check, always printing every result")):
        sub = with_file(name, help_text)
        with_constants(sub)
        sub.add_argument("--op", required=True, help="The operation to check")
        if name == "check":
            sub.add_argument("--silent", action="store_true", help="Suppress per-input output")
        sub.add_argument("--nondet", action="store_true", help="Explore every nondeterministic branch")
        sub.add_argument("--workers", type=_positive, default=1, help="Worker processes (default 1)")
        sub.add_argument(
            "--progress", type=_natural, default=0, metavar="K",
            help="Print a progress line every K inputs (default 0, never)",
        )
        sub.add_argument("--watch", action="store_true", help="Check again whenever the file changes")

    scaffold = with_file("scaffold", "Generate validation theorems for a pre/postcondition pair")
    scaffold.add_argument("--pre", required=True, help="The precondition predicate")
    scaffold.add_argument("--post", required=True, help="The postcondition predicate")
    scaffold.add_argument("--output", type=Path, help="Write the extended specification here")
    return parser


def _typed(args: argparse.Namespace) -> tuple[str, str, TypedSpec]:
    text, filename = read_source(args.file)
    spec = parse_source(text, filename)
    consts = resolve_constants(spec, dict(args.const), args.default)
    return text, filename, typecheck_spec(spec, consts)


def _parse(args: argparse.Namespace) -> int:
    text, filename = read_source(args.file)
    print(pretty_print(parse_source(text, filename)), end="")
    return EXIT_OK


def _typecheck(args: argparse.Namespace) -> int:
    _, filename, typed = _typed(args)
    values = ", ".join(f"{name}={format_value(v)}" for name, v in typed.consts.values.items())
    print(f"{filename}: {len(typed.operations)} operations checked ({values or 'no constants'})")
    return EXIT_OK


def _list_ops(args: argparse.Namespace) -> int:
    _, _, typed = _typed(args)
    for op in typed.operations.values():
        if op.params:
            print(f"{op.kind.value} {op.signature}")
    return EXIT_OK


def _check(args: argparse.Namespace) -> int:
    text, filename, typed = _typed(args)
    if args.op not in typed.operations:
        raise UsageError(f"no operation named {args.op} in {filename}")
    opts = CheckOptions(
        operation=args.op,
        mode=EvalMode.NONDETERMINISTIC if args.nondet else EvalMode.DETERMINISTIC,
        silent=getattr(args, "silent", False),
        workers=args.workers,
        progress_every=args.progress,
    )
    report = check_operation(typed, typed.consts, opts, sys.stdout, source=SourceText(text, filename))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _scaffold(args: argparse.Namespace) -> int:
    text, filename = read_source(args.file)
    spec = parse_source(text, filename)
    skeleton = skeleton_from_spec(spec, args.pre, args.post)
    if args.output is None:
        print(render_validation_theorems(skeleton, spec), end="")
        return EXIT_OK
    if args.output.resolve() == args.file.resolve():
        raise UsageError("--output must not name the input file")
    args.output.write_text(extend_spec(spec, skeleton), encoding="utf-8")
    LOG.info("wrote %s", args.output)
    return EXIT_OK


_COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "parse": _parse,
    "typecheck": _typecheck,
    "list-ops": _list_ops,
    "check": _check,
    "run": _check,
    "scaffold": _scaffold,
}


def _run_once(command: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    try:
        return command(args)
    except UsageError as error:
        print(f"fspec: error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as error:
        print(f"fspec: error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_STATIC_ERROR
    except RecursionError:
        print("error: specification is nested too deeply", file=sys.stderr)
        return EXIT_STATIC_ERROR


def _watch(path: Path, once: Callable[[], int], interval: float = WATCH_INTERVAL) -> int:
    """Run ``once`` now and again after every modification of ``path``, until interrupted."""
    code = once()
    last = os.stat(path).st_mtime_ns
    try:
        while True:
            time.sleep(interval)
            try:
                current = os.stat(path).st_mtime_ns
            except FileNotFoundError:
                continue
            if current != last:
                last = current
                LOG.debug("%s changed, checking again", path)
                code = once()
    except KeyboardInterrupt:
        return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    raise_recursion_limit()
    command = _COMMANDS[args.command]
    if getattr(args, "watch", False):
        return _watch(args.file, lambda: _run_once(command, args))
    return _run_once(command, args)


if __name__ == "__main__":
    sys.exit(main())
