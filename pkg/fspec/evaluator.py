"""Deterministic and nondeterministic execution of typed specifications.

Typed nodes are compiled on first use into closures that are cached on the
node itself: ``det_fn(ctx) -> Value`` for deterministic evaluation and
``nd_fn(ctx) -> Iterator[Value]`` for nondeterministic evaluation. Nodes
that cannot branch reuse their deterministic closure in nondeterministic
mode. Branches are explored depth first; the most recently opened choice is
backtracked first.

Binder domains and ``with`` filters are always evaluated deterministically;
branching happens in the bodies that consume the bindings.
"""
from __future__ import annotations

from enum import Enum
from typing import Any, Callable, Iterable, Iterator, Mapping, Optional, Sequence, TypeVar

from fspec.errors import (
    AssertionFailed,
    DivisionByZero,
    EvaluationError,
    Inadmissible,
    InvariantViolated,
    MeasureNegative,
    MeasureNotDecreased,
    NoChoice,
    Overflow,
    PostconditionViolated,
    PreconditionViolated,
    RangeError,
    TheoremViolated,
)
from fspec.models import SourceSpan
from fspec.semtypes import MAX_INT_BITS, IntType, MapType, RecordType, SemType, format_type
from fspec.typed import (
    OperationKind,
    TAnnotation,
    TArrayInit,
    TAssert,
    TAssign,
    TBinary,
    TBinder,
    TBlock,
    TCall,
    TCard,
    TChoose,
    TChooseCmd,
    TChooseDo,
    TChooseElse,
    TCmd,
    TConst,
    TExpr,
    TFor,
    TForIn,
    TIf,
    TIfCmd,
    TIndex,
    TLet,
    TLoop,
    TMapInit,
    TOperation,
    TPrint,
    TPrintCmd,
    TQuantified,
    TRange,
    TRecord,
    TSelect,
    TSetBuilder,
    TSetLit,
    TSum,
    TTuple,
    TUnary,
    TVar,
    TVarDecl,
    TWhile,
)
from fspec.values import (
    LazySeq,
    MapV,
    RecordV,
    Value,
    contains,
    domain_values,
    format_args,
    format_value,
    sorted_values,
)

A = TypeVar("A")
X = TypeVar("X")
S = TypeVar("S")

Sink = Callable[[str], None]
DetFn = Callable[["Context"], Value]
NdFn = Callable[["Context"], Iterator[Value]]
DetCmdFn = Callable[["Context"], "Context"]
NdCmdFn = Callable[["Context"], Iterator["Context"]]
Bindings = Callable[["Context"], Iterator["Context"]]

FOR_SET = "forSet"
RESULT = "result"
OLD_PREFIX = "old_"


class EvalMode(Enum):
    DETERMINISTIC = "deterministic"
    NONDETERMINISTIC = "nondeterministic"


def _print_line(line: str) -> None:
    print(line)


class Context:
    """Immutable variable bindings; every update returns a new context.

    ``measures`` maps an operation name to the value of its termination
    measure in the invocation that is currently running, and ``sink``
    receives the output of ``print`` phrases.
    """

    __slots__ = ("values", "measures", "sink")

    def __init__(
        self,
        values: Optional[Mapping[str, Value]] = None,
        *,
        measures: Optional[Mapping[str, int]] = None,
        sink: Optional[Sink] = None,
    ) -> None:
        self.values: dict[str, Value] = dict(values or {})
        self.measures: Mapping[str, int] = measures or {}
        self.sink: Sink = sink or _print_line

    def _with(self, values: dict[str, Value]) -> "Context":
        ctx = Context.__new__(Context)
        ctx.values = values
        ctx.measures = self.measures
        ctx.sink = self.sink
        return ctx

    def lookup(self, name: str) -> Value:
        return self.values[name]

    def bind(self, name: str, value: Value) -> "Context":
        values = dict(self.values)
        values[name] = value
        return self._with(values)

    def bind_all(self, pairs: Iterable[tuple[str, Value]]) -> "Context":
        values = dict(self.values)
        values.update(pairs)
        return self._with(values)

    def invocation(self, values: dict[str, Value], measures: Mapping[str, int]) -> "Context":
        """Fresh frame for a called operation, sharing this context's sink."""
        return Context(values, measures=measures, sink=self.sink)

    def __contains__(self, name: object) -> bool:
        return name in self.values

    def __repr__(self) -> str:
        return f"Context({self.values!r})"


def _leave(entry: Context, final: Context, own: Iterable[str] = ()) -> Context:
    """Context after a scope: entry variables with their final values.

    Names in ``own`` were shadowed by the scope and get their entry value back.
    """
    restore = set(own)
    values = {
        name: entry.values[name] if name in restore else final.values[name]
        for name in entry.values
    }
    return entry._with(values)


# --- public entry points -------------------------------------------------------


def eval_expr(expr: TExpr, ctx: Context, mode: EvalMode = EvalMode.DETERMINISTIC) -> LazySeq[Value]:
    """All values of ``expr`` in ``ctx``; exactly one in deterministic mode."""
    if mode is EvalMode.DETERMINISTIC:
        fn = det(expr)
        return LazySeq(lambda: iter((fn(ctx),)))
    branches = nd(expr)
    return LazySeq(lambda: branches(ctx))


def exec_command(cmd: TCmd, ctx: Context, mode: EvalMode = EvalMode.DETERMINISTIC) -> LazySeq[Context]:
    """All contexts reachable by executing ``cmd`` from ``ctx``."""
    if mode is EvalMode.DETERMINISTIC:
        fn = det_cmd(cmd)
        return LazySeq(lambda: iter((fn(ctx),)))
    branches = nd_cmd(cmd)
    return LazySeq(lambda: branches(ctx))


def invoke_operation(
    op: TOperation,
    args: Sequence[Value],
    mode: EvalMode = EvalMode.DETERMINISTIC,
    *,
    sink: Optional[Sink] = None,
    top: bool = True,
) -> LazySeq[Value]:
    """Results of calling ``op`` on ``args`` with every annotation checked.

    At the top level a violated precondition raises Inadmissible; for a
    nested call (``top=False``) it is a PreconditionViolated error.
    """
    caller = Context(sink=sink)
    arguments = tuple(args)
    if mode is EvalMode.DETERMINISTIC:
        return LazySeq(lambda: iter((call_det(op, arguments, caller, top),)))
    return LazySeq(lambda: call_nd(op, arguments, caller, top))


# --- exploration helpers -------------------------------------------------------

# Returned by next() on an exhausted iterator; never a value.
END = object()


def fold_choices(
    items: Sequence[X],
    branch: Callable[[X, A], Iterable[Any]],
    start: A,
    combine: Callable[[A, Any], A],
    done: Optional[Callable[[A], bool]] = None,
) -> Iterator[A]:
    """Fold over ``items`` where each item contributes several values.

    Yields one accumulator per combination of choices, depth first. A branch
    stops early as soon as ``done`` holds for its accumulator.
    """
    if not items or (done is not None and done(start)):
        yield start
        return
    count = len(items)
    stack: list[tuple[Iterator[Any], A]] = [(iter(branch(items[0], start)), start)]
    while stack:
        choices, acc = stack[-1]
        value = next(choices, END)
        if value is END:
            stack.pop()
            continue
        extended = combine(acc, value)
        depth = len(stack)
        if depth == count or (done is not None and done(extended)):
            yield extended
        else:
            stack.append((iter(branch(items[depth], extended)), extended))


def _explore(starts: Iterable[S], expand: Callable[[S], Iterator[tuple[bool, S]]]) -> Iterator[S]:
    """Depth-first search over loop states; yields the final states.

    ``expand`` yields ``(True, state)`` for an exit and ``(False, state)``
    for a successor that is expanded further.
    """
    stack: list[Iterator[tuple[bool, S]]] = [((False, s) for s in starts)]
    while stack:
        item = next(stack[-1], None)
        if item is None:
            stack.pop()
            continue
        final, state = item
        if final:
            yield state
        else:
            stack.append(expand(state))


def _guard(fn: Callable[[Context], A], span: Optional[SourceSpan], text: str) -> Callable[[Context], A]:
    def guarded(ctx: Context) -> A:
        try:
            return fn(ctx)
        except EvaluationError as error:
            raise error.at(span, text)
    return guarded


def _guard_iter(fn: Callable[[Context], Iterator[A]], span: Optional[SourceSpan],
                text: str) -> Callable[[Context], Iterator[A]]:
    def guarded(ctx: Context) -> Iterator[A]:
        try:
            items = fn(ctx)
            while True:
                try:
                    item = next(items)
                except StopIteration:
                    return
                yield item
        except EvaluationError as error:
            raise error.at(span, text)
    return guarded


# --- arithmetic ----------------------------------------------------------------


def _divide(a: int, b: int, span: SourceSpan) -> int:
    if b == 0:
        raise DivisionByZero(span)
    remainder = a % abs(b)
    return (a - remainder) // b


def _remainder(a: int, b: int, span: SourceSpan) -> int:
    if b == 0:
        raise DivisionByZero(span)
    return a % abs(b)


def _power(base: int, exponent: int, span: SourceSpan) -> int:
    if exponent < 0:
        raise EvaluationError(f"negative exponent {exponent}", span)
    if abs(base) > 1 and exponent * (abs(base).bit_length() - 1) > MAX_INT_BITS:
        raise Overflow(f"{base}^{exponent} exceeds {MAX_INT_BITS} bits", span)
    return base**exponent


def _index_type_name(length: int) -> str:
    return format_type(IntType(0, length - 1)) if length > 0 else "of an empty array"


def _check_range(check: Optional[SemType], value: Value, span: SourceSpan) -> Value:
    if check is not None and not contains(check, value):
        raise RangeError(format_value(value), format_type(check), span)
    return value


def _array_index(array: tuple[Value, ...], index: int, span: SourceSpan) -> int:
    if not 0 <= index < len(array):
        raise RangeError(str(index), _index_type_name(len(array)), span)
    return index


def _map_lookup(mapping: MapV, key: Value, dom: SemType, span: SourceSpan) -> Value:
    try:
        return mapping.get(key)
    except KeyError:
        raise RangeError(format_value(key), format_type(dom), span) from None


def _binary_op(op: str, span: SourceSpan) -> Callable[[Any, Any], Value]:
    match op:
        case "+":
            return lambda a, b: a + b
        case "-":
            return lambda a, b: a - b
        case "·":
            return lambda a, b: a * b
        case "/":
            return lambda a, b: _divide(a, b, span)
        case "%":
            return lambda a, b: _remainder(a, b, span)
        case "^":
            return lambda a, b: _power(a, b, span)
        case "=" | "⇔":
            return lambda a, b: a == b
        case "≠":
            return lambda a, b: a != b
        case "<":
            return lambda a, b: a < b
        case "≤":
            return lambda a, b: a <= b
        case ">":
            return lambda a, b: a > b
        case "≥":
            return lambda a, b: a >= b
        case "∈":
            return lambda a, b: a in b
        case "⊆":
            return lambda a, b: a <= b
        case "∪":
            return lambda a, b: a | b
        case "∩":
            return lambda a, b: a & b
        case "\\":
            return lambda a, b: a - b
    raise ValueError(f"unknown operator {op}")


def _unary_op(op: str) -> Callable[[Any], Value]:
    if op == "¬":
        return lambda a: not a
    if op == "-":
        return lambda a: -a
    raise ValueError(f"unknown operator {op}")


# --- bindings --------------------------------------------------------------------


def _binder_values(binder: TBinder) -> Callable[[Context], Iterable[Value]]:
    if binder.domain is None:
        sem_type = binder.type
        return lambda ctx: domain_values(sem_type)
    domain = det(binder.domain)
    return lambda ctx: sorted_values(domain(ctx))


def bindings(binders: Sequence[TBinder], cond: Optional[TExpr]) -> Bindings:
    """Contexts extended by every binder assignment that passes ``cond``.

    Assignments come in canonical order with the last binder varying fastest.
    """
    def level(i: int) -> Bindings:
        if i == len(binders):
            if cond is None:
                return lambda ctx: iter((ctx,))
            test = det(cond)
            return lambda ctx: iter((ctx,) if test(ctx) else ())
        name = binders[i].name
        values_of = _binder_values(binders[i])
        inner = level(i + 1)

        def bind_each(ctx: Context) -> Iterator[Context]:
            for value in values_of(ctx):
                yield from inner(ctx.bind(name, value))
        return bind_each

    return level(0)


def _chosen(binders: Sequence[TBinder]) -> Callable[[Context], Value]:
    if len(binders) == 1:
        name = binders[0].name
        return lambda ctx: ctx.values[name]
    names = tuple(b.name for b in binders)
    return lambda ctx: tuple(ctx.values[n] for n in names)


# --- expression compilation ------------------------------------------------------


def det(node: TExpr) -> DetFn:
    fn = node.det_fn
    if fn is None:
        fn = node.det_fn = _compile_det(node)
    return fn


def nd(node: TExpr) -> NdFn:
    fn = node.nd_fn
    if fn is None:
        if node.nondet:
            fn = _compile_nd(node)
        else:
            single = det(node)
            fn = lambda ctx: iter((single(ctx),))  # noqa: E731
        node.nd_fn = fn
    return fn


def _compile_det(node: TExpr) -> DetFn:
    match node:
        case TConst(value=value):
            return lambda ctx: value
        case TVar(name=name):
            return lambda ctx: ctx.values[name]
        case TUnary(op=op, operand=operand):
            unary = _unary_op(op)
            inner = det(operand)
            return lambda ctx: unary(inner(ctx))
        case TBinary():
            return _binary_det(node)
        case TCall(target=target, args=args, checks=checks, span=span):
            arg_fns = tuple(det(a) for a in args)

            def call(ctx: Context) -> Value:
                values = tuple(f(ctx) for f in arg_fns)
                for check, value in zip(checks, values):
                    _check_range(check, value, span)
                return call_det(target, values, ctx, False)
            return call
        case TTuple(elems=elems):
            fns = tuple(det(e) for e in elems)
            return lambda ctx: tuple(f(ctx) for f in fns)
        case TRecord(names=names, elems=elems):
            fns = tuple(det(e) for e in elems)
            return lambda ctx: RecordV(names, tuple(f(ctx) for f in fns))
        case TSelect(expr=expr, position=position):
            inner = det(expr)
            if isinstance(expr.type, RecordType):
                return lambda ctx: inner(ctx).vals[position]  # type: ignore[union-attr]
            return lambda ctx: inner(ctx)[position]  # type: ignore[index]
        case TIndex():
            return _index_det(node)
        case TArrayInit(length=length, value=value, check=check, span=span):
            inner = det(value)
            return lambda ctx: (_check_range(check, inner(ctx), span),) * length
        case TMapInit(dom=dom, value=value, check=check, span=span):
            inner = det(value)
            keys = tuple(domain_values(dom))
            positions = {key: i for i, key in enumerate(keys)}
            return lambda ctx: MapV(keys, (_check_range(check, inner(ctx), span),) * len(keys), positions)
        case TSetLit(elems=elems):
            fns = tuple(det(e) for e in elems)
            return lambda ctx: frozenset(f(ctx) for f in fns)
        case TRange(lo=lo, hi=hi):
            low, high = det(lo), det(hi)
            return lambda ctx: frozenset(range(low(ctx), high(ctx) + 1))  # type: ignore[arg-type, operator]
        case TCard(expr=expr):
            inner = det(expr)
            return lambda ctx: len(inner(ctx))  # type: ignore[arg-type]
        case TSetBuilder(expr=expr, binders=binders, cond=cond):
            each = bindings(binders, cond)
            element = det(expr)
            return lambda ctx: frozenset(element(c) for c in each(ctx))
        case TQuantified(universal=universal, binders=binders, cond=cond, body=body):
            each = bindings(binders, cond)
            formula = det(body)
            if universal:
                return lambda ctx: all(formula(c) for c in each(ctx))
            return lambda ctx: any(formula(c) for c in each(ctx))
        case TSum(binders=binders, cond=cond, body=body):
            each = bindings(binders, cond)
            term = det(body)
            return lambda ctx: sum(term(c) for c in each(ctx))  # type: ignore[misc]
        case TChoose(binders=binders, cond=cond, span=span):
            each = bindings(binders, cond)
            pick = _chosen(binders)

            def choose(ctx: Context) -> Value:
                for candidate in each(ctx):
                    return pick(candidate)
                raise NoChoice(span)
            return choose
        case TIf(cond=cond, then=then, else_=else_):
            test, yes, no = det(cond), det(then), det(else_)
            return lambda ctx: yes(ctx) if test(ctx) else no(ctx)
        case TLet(name=name, value=value, body=body):
            bound, inner = det(value), det(body)
            return lambda ctx: inner(ctx.bind(name, bound(ctx)))
        case TPrint(expr=expr):
            inner = det(expr)

            def show(ctx: Context) -> Value:
                value = inner(ctx)
                ctx.sink(f"print: {format_value(value)}")
                return value
            return show
    raise TypeError(f"cannot evaluate {type(node).__name__}")


def _binary_det(node: TBinary) -> DetFn:
    left, right = det(node.left), det(node.right)
    match node.op:
        case "∧":
            return lambda ctx: bool(left(ctx)) and bool(right(ctx))
        case "∨":
            return lambda ctx: bool(left(ctx)) or bool(right(ctx))
        case "⇒":
            return lambda ctx: (not left(ctx)) or bool(right(ctx))
    apply = _binary_op(node.op, node.span)
    return lambda ctx: apply(left(ctx), right(ctx))


def _index_det(node: TIndex) -> DetFn:
    container, index = det(node.expr), det(node.index)
    span = node.span
    container_type = node.expr.type
    if isinstance(container_type, MapType):
        dom = container_type.dom
        return lambda ctx: _map_lookup(container(ctx), index(ctx), dom, span)  # type: ignore[arg-type]

    def element(ctx: Context) -> Value:
        array = container(ctx)
        return array[_array_index(array, index(ctx), span)]  # type: ignore[arg-type, index]
    return element


def _combined(children: Sequence[TExpr], combine: Callable[[tuple[Value, ...]], Value]) -> NdFn:
    fns = tuple(nd(c) for c in children)

    def branches(ctx: Context) -> Iterator[Value]:
        for values in fold_choices(fns, lambda f, _: f(ctx), (), lambda acc, v: acc + (v,)):
            yield combine(values)
    return branches


def _compile_nd(node: TExpr) -> NdFn:
    match node:
        case TUnary(op=op, operand=operand):
            unary = _unary_op(op)
            return _combined((operand,), lambda vs: unary(vs[0]))
        case TBinary():
            return _binary_nd(node)
        case TCall(target=target, args=args, checks=checks, span=span):
            arg_fns = tuple(nd(a) for a in args)

            def call(ctx: Context) -> Iterator[Value]:
                combos = fold_choices(arg_fns, lambda f, _: f(ctx), (), lambda acc, v: acc + (v,))
                for values in combos:
                    for check, value in zip(checks, values):
                        _check_range(check, value, span)
                    yield from call_nd(target, values, ctx, False)
            return call
        case TTuple(elems=elems):
            return _combined(elems, tuple)
        case TRecord(names=names, elems=elems):
            return _combined(elems, lambda vs: RecordV(names, vs))
        case TSelect(expr=expr, position=position):
            if isinstance(expr.type, RecordType):
                return _combined((expr,), lambda vs: vs[0].vals[position])  # type: ignore[union-attr]
            return _combined((expr,), lambda vs: vs[0][position])  # type: ignore[index]
        case TIndex(expr=expr, index=index, span=span):
            container_type = expr.type
            if isinstance(container_type, MapType):
                dom = container_type.dom
                return _combined((expr, index), lambda vs: _map_lookup(vs[0], vs[1], dom, span))  # type: ignore[arg-type]
            return _combined(
                (expr, index),
                lambda vs: vs[0][_array_index(vs[0], vs[1], span)],  # type: ignore[arg-type, index]
            )
        case TArrayInit(length=length, value=value, check=check, span=span):
            return _combined((value,), lambda vs: (_check_range(check, vs[0], span),) * length)
        case TMapInit(dom=dom, value=value, check=check, span=span):
            keys = tuple(domain_values(dom))
            positions = {key: i for i, key in enumerate(keys)}
            return _combined(
                (value,),
                lambda vs: MapV(keys, (_check_range(check, vs[0], span),) * len(keys), positions),
            )
        case TSetLit(elems=elems):
            return _combined(elems, frozenset)
        case TRange(lo=lo, hi=hi):
            return _combined((lo, hi), lambda vs: frozenset(range(vs[0], vs[1] + 1)))  # type: ignore[arg-type, operator]
        case TCard(expr=expr):
            return _combined((expr,), lambda vs: len(vs[0]))  # type: ignore[arg-type]
        case TSetBuilder(expr=expr, binders=binders, cond=cond):
            each = bindings(binders, cond)
            element = nd(expr)
            return lambda ctx: fold_choices(
                list(each(ctx)), lambda c, _: element(c), frozenset(), lambda acc, v: acc | {v},
            )
        case TQuantified(universal=universal, binders=binders, cond=cond, body=body):
            each = bindings(binders, cond)
            formula = nd(body)
            if universal:
                return lambda ctx: fold_choices(
                    list(each(ctx)), lambda c, _: formula(c), True,
                    lambda acc, v: bool(acc and v), lambda acc: not acc,
                )
            return lambda ctx: fold_choices(
                list(each(ctx)), lambda c, _: formula(c), False,
                lambda acc, v: bool(acc or v), lambda acc: acc,
            )
        case TSum(binders=binders, cond=cond, body=body):
            each = bindings(binders, cond)
            term = nd(body)
            return lambda ctx: fold_choices(list(each(ctx)), lambda c, _: term(c), 0, lambda acc, v: acc + v)
        case TChoose(binders=binders, cond=cond, span=span):
            each = bindings(binders, cond)
            pick = _chosen(binders)

            def choose(ctx: Context) -> Iterator[Value]:
                found = False
                for candidate in each(ctx):
                    found = True
                    yield pick(candidate)
                if not found:
                    raise NoChoice(span)
            return choose
        case TIf(cond=cond, then=then, else_=else_):
            test, yes, no = nd(cond), nd(then), nd(else_)

            def branch(ctx: Context) -> Iterator[Value]:
                for holds in test(ctx):
                    yield from (yes if holds else no)(ctx)
            return branch
        case TLet(name=name, value=value, body=body):
            bound, inner = nd(value), nd(body)

            def let(ctx: Context) -> Iterator[Value]:
                for v in bound(ctx):
                    yield from inner(ctx.bind(name, v))
            return let
        case TPrint(expr=expr):
            inner = nd(expr)

            def show(ctx: Context) -> Iterator[Value]:
                for value in inner(ctx):
                    ctx.sink(f"print: {format_value(value)}")
                    yield value
            return show
    raise TypeError(f"cannot evaluate {type(node).__name__} nondeterministically")


def _binary_nd(node: TBinary) -> NdFn:
    left, right = nd(node.left), nd(node.right)
    op = node.op
    if op in ("∧", "∨", "⇒"):
        # A left value equal to ``decisive`` settles the result without the right operand.
        decisive = op == "∨"
        outcome = op != "∧"

        def connective(ctx: Context) -> Iterator[Value]:
            for a in left(ctx):
                if bool(a) is decisive:
                    yield outcome
                else:
                    yield from (bool(b) for b in right(ctx))
        return connective
    apply = _binary_op(op, node.span)
    return _combined((node.left, node.right), lambda vs: apply(vs[0], vs[1]))


# --- annotations -----------------------------------------------------------------


def _holds_det(annotation: TAnnotation) -> Callable[[Context], bool]:
    formula = det(annotation.expr)
    return _guard(lambda ctx: bool(formula(ctx)), annotation.span, annotation.text)


def _holds_nd(annotation: TAnnotation) -> Callable[[Context], bool]:
    """True iff every branch of the annotation evaluates to true."""
    if not annotation.expr.nondet:
        return _holds_det(annotation)
    formula = nd(annotation.expr)
    return _guard(lambda ctx: all(formula(ctx)), annotation.span, annotation.text)


def _measure(annotation: TAnnotation) -> Callable[[Context], int]:
    value_of = det(annotation.expr)
    span, text = annotation.span, annotation.text

    def measure(ctx: Context) -> int:
        value = value_of(ctx)
        if value < 0:  # type: ignore[operator]
            raise MeasureNegative(value, span, text)  # type: ignore[arg-type]
        return value  # type: ignore[return-value]
    return _guard(measure, span, text)


class _LoopChecks:
    """Invariant and termination checks of one annotated loop."""

    def __init__(self, loop: TLoop, mode: EvalMode) -> None:
        holds = _holds_det if mode is EvalMode.DETERMINISTIC else _holds_nd
        self.invariants = tuple((ann, holds(ann)) for ann in loop.invariants)
        self.measure = _measure(loop.decreases) if loop.decreases is not None else None
        self.decreases = loop.decreases
        self.old_names = loop.old_names
        self.own = tuple(OLD_PREFIX + name for name in loop.old_names)

    def enter(self, ctx: Context) -> Context:
        if self.old_names:
            ctx = ctx.bind_all((OLD_PREFIX + name, ctx.values[name]) for name in self.old_names)
        self.check(ctx, 0)
        return ctx

    def check(self, ctx: Context, iteration: int) -> None:
        for annotation, holds in self.invariants:
            if not holds(ctx):
                raise InvariantViolated(iteration, annotation.span, annotation.text)

    def before(self, ctx: Context) -> Optional[int]:
        return self.measure(ctx) if self.measure is not None else None

    def after(self, ctx: Context, iteration: int, before: Optional[int]) -> None:
        self.check(ctx, iteration)
        if self.measure is not None and before is not None:
            after = self.measure(ctx)
            if after >= before:
                assert self.decreases is not None
                raise MeasureNotDecreased(before, after, self.decreases.span, self.decreases.text)


# --- command compilation -----------------------------------------------------------


def det_cmd(cmd: TCmd) -> DetCmdFn:
    fn = cmd.det_fn
    if fn is None:
        fn = cmd.det_fn = _compile_cmd_det(cmd)
    return fn


def nd_cmd(cmd: TCmd) -> NdCmdFn:
    fn = cmd.nd_fn
    if fn is None:
        if cmd.nondet:
            fn = _compile_cmd_nd(cmd)
        else:
            single = det_cmd(cmd)
            fn = lambda ctx: iter((single(ctx),))  # noqa: E731
        cmd.nd_fn = fn
    return fn


def _store(container: Value, steps: Sequence[tuple[SemType, Value]], value: Value, span: SourceSpan) -> Value:
    if not steps:
        return value
    (container_type, index), rest = steps[0], steps[1:]
    if isinstance(container_type, MapType):
        assert isinstance(container, MapV)
        inner = _map_lookup(container, index, container_type.dom, span)
        return container.replace(index, _store(inner, rest, value, span))
    assert isinstance(container, tuple) and isinstance(index, int)
    position = _array_index(container, index, span)
    updated = _store(container[position], rest, value, span)
    return container[:position] + (updated,) + container[position + 1:]


def _assign(cmd: TAssign, ctx: Context, indices: Sequence[Value], value: Value) -> Context:
    _check_range(cmd.check, value, cmd.span)
    if cmd.path:
        steps = [(step.container, index) for step, index in zip(cmd.path, indices)]
        value = _store(ctx.values[cmd.name], steps, value, cmd.span)
    return ctx.bind(cmd.name, value)


def _compile_cmd_det(cmd: TCmd) -> DetCmdFn:
    match cmd:
        case TVarDecl(name=name, init=init, check=check, span=span):
            value_of = det(init)
            return _guard(lambda ctx: ctx.bind(name, _check_range(check, value_of(ctx), span)),
                          span, cmd.text)
        case TAssign(path=path, value=value):
            index_fns = tuple(det(step.index) for step in path)
            value_of = det(value)

            def assign(ctx: Context) -> Context:
                indices = tuple(f(ctx) for f in index_fns)
                return _assign(cmd, ctx, indices, value_of(ctx))
            return _guard(assign, cmd.span, cmd.text)
        case TBlock(cmds=cmds):
            fns = tuple(det_cmd(c) for c in cmds)

            def block(ctx: Context) -> Context:
                current = ctx
                for fn in fns:
                    current = fn(current)
                return _leave(ctx, current)
            return block
        case TIfCmd(cond=cond, then=then, else_=else_):
            test = _guard(det(cond), cond.span, cmd.text)
            yes = det_cmd(then)
            no = det_cmd(else_) if else_ is not None else None

            def branch(ctx: Context) -> Context:
                if test(ctx):
                    return _leave(ctx, yes(ctx))
                return _leave(ctx, no(ctx)) if no is not None else ctx
            return branch
        case TWhile(cond=cond, loop=loop, body=body):
            return _while_det(_guard(det(cond), cond.span, cmd.text), loop, det_cmd(body), None)
        case TFor(init=init, cond=cond, update=update, loop=loop, body=body):
            return _while_det(_guard(det(cond), cond.span, cmd.text), loop,
                              det_cmd(body), (det_cmd(init), det_cmd(update)))
        case TForIn():
            return _for_in_det(cmd)
        case TChooseCmd(binders=binders, cond=cond, span=span):
            each = bindings(binders, cond)

            def choose(ctx: Context) -> Context:
                for candidate in each(ctx):
                    return candidate
                raise NoChoice(span)
            return _guard(choose, span, cmd.text)
        case TChooseElse(binders=binders, cond=cond, then=then, else_=else_):
            each = _guard_iter(bindings(binders, cond), cmd.span, cmd.text)
            yes, no = det_cmd(then), det_cmd(else_)

            def choose_else(ctx: Context) -> Context:
                for candidate in each(ctx):
                    return _leave(ctx, yes(candidate))
                return _leave(ctx, no(ctx))
            return choose_else
        case TChooseDo():
            return _choose_do_det(cmd)
        case TAssert(formula=formula, span=span):
            holds = det(formula)

            def check(ctx: Context) -> Context:
                if not holds(ctx):
                    raise AssertionFailed(span)
                return ctx
            return _guard(check, span, cmd.text)
        case TPrintCmd(expr=expr, span=span):
            value_of = det(expr)

            def show(ctx: Context) -> Context:
                ctx.sink(f"print: {format_value(value_of(ctx))}")
                return ctx
            return _guard(show, span, cmd.text)
    raise TypeError(f"cannot execute {type(cmd).__name__}")


def _while_det(test: DetFn, loop: TLoop, body: DetCmdFn,
               counted: Optional[tuple[DetCmdFn, DetCmdFn]]) -> DetCmdFn:
    checks = _LoopChecks(loop, EvalMode.DETERMINISTIC)

    def run(entry: Context) -> Context:
        ctx = counted[0](entry) if counted is not None else entry
        ctx = checks.enter(ctx)
        iteration = 0
        while test(ctx):
            before = checks.before(ctx)
            ctx = body(ctx)
            if counted is not None:
                ctx = counted[1](ctx)
            iteration += 1
            checks.after(ctx, iteration, before)
        return _leave(entry, ctx, checks.own)
    return run


def _for_in_det(cmd: TForIn) -> DetCmdFn:
    checks = _LoopChecks(cmd.loop, EvalMode.DETERMINISTIC)
    domain = _guard(det(cmd.domain), cmd.span, cmd.text)
    keep = _guard(det(cmd.cond), cmd.span, cmd.text) if cmd.cond is not None else None
    body = det_cmd(cmd.body)
    name = cmd.name
    own = (name, FOR_SET) + checks.own

    def run(entry: Context) -> Context:
        elements = sorted_values(domain(entry))  # type: ignore[arg-type]
        if keep is not None:
            elements = [e for e in elements if keep(entry.bind(name, e))]
        ctx = checks.enter(entry.bind(FOR_SET, frozenset()))
        completed: frozenset[Value] = frozenset()
        for iteration, element in enumerate(elements, 1):
            before = checks.before(ctx)
            ctx = body(ctx.bind(name, element))
            completed = completed | {element}
            ctx = ctx.bind(FOR_SET, completed)
            checks.after(ctx, iteration, before)
        return _leave(entry, ctx, own)
    return run


def _choose_do_det(cmd: TChooseDo) -> DetCmdFn:
    checks = _LoopChecks(cmd.loop, EvalMode.DETERMINISTIC)
    each = _guard_iter(bindings(cmd.binders, cmd.cond), cmd.span, cmd.text)
    body = det_cmd(cmd.body)
    own = tuple(b.name for b in cmd.binders) + checks.own

    def run(entry: Context) -> Context:
        ctx = checks.enter(entry)
        iteration = 0
        while True:
            candidate = next(each(ctx), None)
            if candidate is None:
                break
            before = checks.before(ctx)
            ctx = body(candidate)
            iteration += 1
            checks.after(ctx, iteration, before)
        return _leave(entry, ctx, own)
    return run


def _compile_cmd_nd(cmd: TCmd) -> NdCmdFn:
    match cmd:
        case TVarDecl(name=name, init=init, check=check, span=span):
            values_of = nd(init)

            def declare(ctx: Context) -> Iterator[Context]:
                for value in values_of(ctx):
                    yield ctx.bind(name, _check_range(check, value, span))
            return _guard_iter(declare, span, cmd.text)
        case TAssign(path=path, value=value):
            parts = tuple(nd(step.index) for step in path) + (nd(value),)

            def assign(ctx: Context) -> Iterator[Context]:
                combos = fold_choices(parts, lambda f, _: f(ctx), (), lambda acc, v: acc + (v,))
                for values in combos:
                    yield _assign(cmd, ctx, values[:-1], values[-1])
            return _guard_iter(assign, cmd.span, cmd.text)
        case TBlock(cmds=cmds):
            fns = tuple(nd_cmd(c) for c in cmds)

            def block(ctx: Context) -> Iterator[Context]:
                for final in fold_choices(fns, lambda f, current: f(current), ctx, lambda _, c: c):
                    yield _leave(ctx, final)
            return block
        case TIfCmd(cond=cond, then=then, else_=else_):
            test = _guard_iter(nd(cond), cond.span, cmd.text)
            yes = nd_cmd(then)
            no = nd_cmd(else_) if else_ is not None else None

            def branch(ctx: Context) -> Iterator[Context]:
                for holds in test(ctx):
                    if holds:
                        yield from (_leave(ctx, c) for c in yes(ctx))
                    elif no is not None:
                        yield from (_leave(ctx, c) for c in no(ctx))
                    else:
                        yield ctx
            return branch
        case TWhile(cond=cond, loop=loop, body=body):
            return _while_nd(_guard_iter(nd(cond), cond.span, cmd.text), loop, nd_cmd(body), None)
        case TFor(init=init, cond=cond, update=update, loop=loop, body=body):
            return _while_nd(_guard_iter(nd(cond), cond.span, cmd.text), loop,
                             nd_cmd(body), (nd_cmd(init), nd_cmd(update)))
        case TForIn():
            return _for_in_nd(cmd)
        case TChooseCmd(binders=binders, cond=cond, span=span):
            each = bindings(binders, cond)

            def choose(ctx: Context) -> Iterator[Context]:
                found = False
                for candidate in each(ctx):
                    found = True
                    yield candidate
                if not found:
                    raise NoChoice(span)
            return _guard_iter(choose, span, cmd.text)
        case TChooseElse(binders=binders, cond=cond, then=then, else_=else_):
            each = _guard_iter(bindings(binders, cond), cmd.span, cmd.text)
            yes, no = nd_cmd(then), nd_cmd(else_)

            def choose_else(ctx: Context) -> Iterator[Context]:
                candidates = list(each(ctx))
                if not candidates:
                    yield from (_leave(ctx, c) for c in no(ctx))
                for candidate in candidates:
                    yield from (_leave(ctx, c) for c in yes(candidate))
            return choose_else
        case TChooseDo():
            return _choose_do_nd(cmd)
        case TAssert(formula=formula, span=span):
            holds = nd(formula)

            def check(ctx: Context) -> Iterator[Context]:
                if not all(holds(ctx)):
                    raise AssertionFailed(span)
                yield ctx
            return _guard_iter(check, span, cmd.text)
        case TPrintCmd(expr=expr, span=span):
            values_of = nd(expr)

            def show(ctx: Context) -> Iterator[Context]:
                for value in values_of(ctx):
                    ctx.sink(f"print: {format_value(value)}")
                    yield ctx
            return _guard_iter(show, span, cmd.text)
    raise TypeError(f"cannot execute {type(cmd).__name__} nondeterministically")


_LoopState = tuple[Context, int]
_ForInState = tuple[Context, tuple[Value, ...], frozenset[Value], int]


def _while_nd(test: NdFn, loop: TLoop, body: NdCmdFn,
              counted: Optional[tuple[NdCmdFn, NdCmdFn]]) -> NdCmdFn:
    checks = _LoopChecks(loop, EvalMode.NONDETERMINISTIC)

    def step(ctx: Context) -> Iterator[Context]:
        if counted is None:
            return body(ctx)
        update = counted[1]
        return (after for c in body(ctx) for after in update(c))

    def expand(state: _LoopState) -> Iterator[tuple[bool, _LoopState]]:
        ctx, iteration = state
        for holds in test(ctx):
            if not holds:
                yield True, state
                continue
            before = checks.before(ctx)
            for successor in step(ctx):
                checks.after(successor, iteration + 1, before)
                yield False, (successor, iteration + 1)

    def run(entry: Context) -> Iterator[Context]:
        starts = counted[0](entry) if counted is not None else iter((entry,))
        initial = ((checks.enter(c), 0) for c in starts)
        for ctx, _ in _explore(initial, expand):
            yield _leave(entry, ctx, checks.own)
    return run


def _for_in_nd(cmd: TForIn) -> NdCmdFn:
    checks = _LoopChecks(cmd.loop, EvalMode.NONDETERMINISTIC)
    domain = _guard_iter(nd(cmd.domain), cmd.span, cmd.text)
    keep = _guard(det(cmd.cond), cmd.span, cmd.text) if cmd.cond is not None else None
    body = nd_cmd(cmd.body)
    name = cmd.name
    own = (name, FOR_SET) + checks.own

    def expand(state: _ForInState) -> Iterator[tuple[bool, _ForInState]]:
        ctx, remaining, completed, iteration = state
        if not remaining:
            yield True, state
            return
        before = checks.before(ctx)
        for position, element in enumerate(remaining):
            rest = remaining[:position] + remaining[position + 1:]
            done = completed | {element}
            for successor in body(ctx.bind(name, element)):
                successor = successor.bind(FOR_SET, done)
                checks.after(successor, iteration + 1, before)
                yield False, (successor, rest, done, iteration + 1)

    def run(entry: Context) -> Iterator[Context]:
        for collection in domain(entry):
            elements = sorted_values(collection)  # type: ignore[arg-type]
            if keep is not None:
                elements = [e for e in elements if keep(entry.bind(name, e))]
            start = checks.enter(entry.bind(FOR_SET, frozenset()))
            for ctx, _, _, _ in _explore(((start, tuple(elements), frozenset(), 0),), expand):
                yield _leave(entry, ctx, own)
    return run


def _choose_do_nd(cmd: TChooseDo) -> NdCmdFn:
    checks = _LoopChecks(cmd.loop, EvalMode.NONDETERMINISTIC)
    each = _guard_iter(bindings(cmd.binders, cmd.cond), cmd.span, cmd.text)
    body = nd_cmd(cmd.body)
    own = tuple(b.name for b in cmd.binders) + checks.own

    def expand(state: _LoopState) -> Iterator[tuple[bool, _LoopState]]:
        ctx, iteration = state
        candidates = list(each(ctx))
        if not candidates:
            yield True, state
            return
        before = checks.before(ctx)
        for candidate in candidates:
            for successor in body(candidate):
                checks.after(successor, iteration + 1, before)
                yield False, (successor, iteration + 1)

    def run(entry: Context) -> Iterator[Context]:
        for ctx, _ in _explore(((checks.enter(entry), 0),), expand):
            yield _leave(entry, ctx, own)
    return run


# --- operation invocation ----------------------------------------------------------


class _Compiled:
    """Closures of one operation for one evaluation mode."""

    def __init__(self, op: TOperation, mode: EvalMode) -> None:
        holds = _holds_det if mode is EvalMode.DETERMINISTIC else _holds_nd
        self.requires = tuple((ann, holds(ann)) for ann in op.requires)
        self.ensures = tuple((ann, holds(ann)) for ann in op.ensures)
        self.measure = _measure(op.decreases) if op.decreases is not None else None
        self.body: Callable[[Context], Any]
        if op.kind is OperationKind.PROC:
            assert op.ret is not None
            ret_span, ret_text = op.ret.span, op.ret_text
            if mode is EvalMode.DETERMINISTIC:
                commands = tuple(det_cmd(c) for c in op.commands)
                ret = _guard(det(op.ret), ret_span, ret_text)

                def proc_det(ctx: Context) -> Value:
                    for command in commands:
                        ctx = command(ctx)
                    return ret(ctx)
                self.body = proc_det
            else:
                nd_commands = tuple(nd_cmd(c) for c in op.commands)
                nd_ret = _guard_iter(nd(op.ret), ret_span, ret_text)

                def proc_nd(ctx: Context) -> Iterator[Value]:
                    finals = fold_choices(nd_commands, lambda f, current: f(current), ctx, lambda _, c: c)
                    for final in finals:
                        yield from nd_ret(final)
                self.body = proc_nd
        else:
            assert op.body is not None
            if mode is EvalMode.DETERMINISTIC:
                self.body = _guard(det(op.body), op.body.span, op.body_text)
            else:
                self.body = _guard_iter(nd(op.body), op.body.span, op.body_text)


def _compiled(op: TOperation, mode: EvalMode) -> _Compiled:
    code = op.compiled.get(mode.value)
    if code is None:
        code = op.compiled[mode.value] = _Compiled(op, mode)
    return code


def _enter(op: TOperation, code: _Compiled, args: tuple[Value, ...], caller: Context, top: bool) -> Context:
    """Frame for a call of ``op``: checks the precondition and the measure."""
    ctx = caller.invocation({p.name: a for p, a in zip(op.params, args)}, {})
    for annotation, holds in code.requires:
        if not holds(ctx):
            if top:
                raise Inadmissible(op.name)
            raise PreconditionViolated(op.name, format_args(args), annotation.span, annotation.text)
    if code.measure is not None:
        assert op.decreases is not None
        measure = code.measure(ctx)
        previous = caller.measures.get(op.name)
        if previous is not None and measure >= previous:
            raise MeasureNotDecreased(previous, measure, op.decreases.span, op.decreases.text)
        ctx.measures = {op.name: measure}
    return ctx


def _finish(op: TOperation, code: _Compiled, args: tuple[Value, ...], ctx: Context,
            value: Value, top: bool) -> Value:
    if op.result_check is not None and not contains(op.result_check, value):
        text = op.ret_text if op.kind is OperationKind.PROC else op.body_text
        raise RangeError(format_value(value), format_type(op.result_check), op.span, text)
    if code.ensures:
        with_result = ctx.bind(RESULT, value)
        for annotation, holds in code.ensures:
            if not holds(with_result):
                raise PostconditionViolated(op.name, format_args(args), format_value(value),
                                            annotation.span, annotation.text)
    if top and op.kind is OperationKind.THEOREM and value is False:
        raise TheoremViolated(op.name, format_args(args), op.span, op.body_text)
    return value


def call_det(op: TOperation, args: tuple[Value, ...], caller: Context, top: bool) -> Value:
    code = _compiled(op, EvalMode.DETERMINISTIC)
    ctx = _enter(op, code, args, caller, top)
    return _finish(op, code, args, ctx, code.body(ctx), top)


def call_nd(op: TOperation, args: tuple[Value, ...], caller: Context, top: bool) -> Iterator[Value]:
    code = _compiled(op, EvalMode.NONDETERMINISTIC)
    ctx = _enter(op, code, args, caller, top)
    for value in code.body(ctx):
        yield _finish(op, code, args, ctx, value, top)
