"""Constant resolution and type checking.

Declarations are processed once, in source order, so every phrase may only
refer to entities declared before it (an operation may also call itself).
The result is a :class:`~fspec.typed.TypedSpec` whose nodes the evaluator
executes directly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

from fspec.errors import (
    ArityMismatch,
    CardinalityOverflow,
    MissingDecreases,
    RecursionTooDeep,
    SpecError,
    SpecTypeError,
    TheoremFailed,
    UnknownConstant,
)
from fspec.evaluator import FOR_SET, OLD_PREFIX, RESULT, Context, EvalMode, det, invoke_operation
from fspec.models import (
    Apply,
    ArrayInit,
    ArrayTypeExpr,
    Assert,
    Assign,
    Binary,
    Binder,
    Block,
    BoolLit,
    BoolTypeExpr,
    Card,
    Choose,
    ChooseCmd,
    ChooseDo,
    ChooseElse,
    Cmd,
    EmptySet,
    Expr,
    FieldSelect,
    For,
    ForIn,
    FunDecl,
    If,
    IfExpr,
    Index,
    IntLit,
    IntTypeExpr,
    Let,
    LoopSpec,
    MapInit,
    MapTypeExpr,
    NamedTypeExpr,
    NatTypeExpr,
    OperationDecl,
    PredDecl,
    Print,
    PrintCmd,
    ProcDecl,
    Quantified,
    Range,
    RecordExpr,
    RecordTypeExpr,
    Select,
    SetBuilder,
    SetLit,
    SetTypeExpr,
    SourceSpan,
    Spec,
    Sum,
    TheoremDecl,
    TupleExpr,
    TupleTypeExpr,
    TypeDecl,
    TypeExpr,
    Unary,
    ValDecl,
    Var,
    VarDecl,
    While,
)
from fspec.printer import print_clause, print_command, print_expr
from fspec.semtypes import (
    BOOL,
    COUNT_LIMIT,
    MAX_INT_BITS,
    ArrayType,
    BoolType,
    IntType,
    MapType,
    RecordType,
    SemType,
    SetType,
    TupleType,
    cardinality,
    compatible,
    fits,
    format_type,
    join,
)
from fspec.typed import (
    ConstEnv,
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
    TIndexStep,
    TLet,
    TLoop,
    TMapInit,
    TOperation,
    TParam,
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
    TypedSpec,
)
from fspec.values import Value, contains, format_value

LOG = logging.getLogger(__name__)

DEFAULT_CONSTANT = 5

# Static integer bounds are clamped here; values beyond it overflow at runtime.
_INT_LIMIT = 1 << MAX_INT_BITS

_ARITHMETIC = ("+", "-", "·", "/", "%", "^")
_ORDERING = ("<", "≤", ">", "≥")
_CONNECTIVES = ("∧", "∨", "⇒", "⇔")
_SET_OPERATIONS = ("∪", "∩", "\\")


def resolve_constants(
    spec: Spec,
    overrides: Optional[Mapping[str, int]] = None,
    default_value: int = DEFAULT_CONSTANT,
) -> ConstEnv:
    """Give every constant of ``spec`` its value.

    An unspecified constant (``val N: ℕ;``) takes its override if one is
    given and ``default_value`` otherwise; defined constants are evaluated
    in declaration order. Parameterless theorems are evaluated once the
    constants they mention are known.

    Raises:
        UnknownConstant: If an override names no unspecified constant.
        SpecError: If a defining expression is ill-typed or fails to evaluate.
        TheoremFailed: If a parameterless theorem is false.
    """
    overrides = dict(overrides or {})
    unspecified = {
        decl.name for decl in spec.declarations
        if isinstance(decl, ValDecl) and decl.value is None
    }
    for name in overrides:
        if name not in unspecified:
            raise UnknownConstant(name)
    for name, value in overrides.items():
        if value < 0:
            raise SpecError(f"constant {name} must be a natural number, got {value}")
    if default_value < 0:
        raise SpecError(f"default constant value must be a natural number, got {default_value}")
    elaborator = _Elaborator(spec, overrides, default_value, check_theorems=True)
    elaborator.run()
    LOG.debug("resolved constants: %s", {n: format_value(v) for n, v in elaborator.const_values.items()})
    return elaborator.const_env()


def typecheck_spec(spec: Spec, consts: Optional[ConstEnv] = None) -> TypedSpec:
    """Resolve names and types of ``spec`` under the constant values ``consts``.

    Raises:
        SpecTypeError: On any static error.
        MissingDecreases: For a recursive operation without a measure.
        TheoremFailed: If ``consts`` is omitted and a parameterless theorem is false.
    """
    if consts is None:
        consts = resolve_constants(spec)
    elaborator = _Elaborator(spec, consts.unspecified, DEFAULT_CONSTANT, check_theorems=False)
    elaborator.run()
    return TypedSpec(spec, elaborator.const_env(), dict(elaborator.types), dict(elaborator.operations))


@dataclass
class _Scope:
    """Names visible to a phrase.

    ``olds`` collects the variables an invariant reads as ``old_<name>``; it
    is only set while typing loop annotations.
    """

    variables: dict[str, SemType] = field(default_factory=dict)
    assignable: set[str] = field(default_factory=set)
    result: Optional[SemType] = None
    olds: Optional[list[str]] = None
    for_set: Optional[SemType] = None

    def copy(self) -> "_Scope":
        return _Scope(dict(self.variables), set(self.assignable), self.result, self.olds, self.for_set)

    def block(self) -> "_Scope":
        """Scope of a nested command: same variables, no annotation names."""
        return _Scope(dict(self.variables), set(self.assignable), None, None, self.for_set)

    def bind(self, name: str, sem_type: SemType, assignable: bool = False) -> "_Scope":
        scope = self.copy()
        scope.declare(name, sem_type, assignable)
        return scope

    def declare(self, name: str, sem_type: SemType, assignable: bool = False) -> None:
        self.variables[name] = sem_type
        if assignable:
            self.assignable.add(name)
        else:
            self.assignable.discard(name)


def _fail(message: str, span: Optional[SourceSpan]) -> SpecTypeError:
    return SpecTypeError(message, span)


def _clamp(value: int) -> int:
    return max(-_INT_LIMIT, min(_INT_LIMIT, value))


def _interval(lo: int, hi: int) -> IntType:
    return IntType(_clamp(lo), _clamp(hi))


def _safe_cardinality(sem_type: SemType) -> int:
    try:
        return cardinality(sem_type)
    except CardinalityOverflow:
        return COUNT_LIMIT


def _first_line(cmd: Cmd) -> str:
    return print_command(cmd).splitlines()[0]


class _Elaborator:
    def __init__(
        self,
        spec: Spec,
        overrides: Mapping[str, int],
        default_value: int,
        check_theorems: bool,
    ) -> None:
        self.spec = spec
        self.overrides = overrides
        self.default_value = default_value
        self.check_theorems = check_theorems
        self.unspecified: dict[str, int] = {}
        self.const_values: dict[str, Value] = {}
        self.const_types: dict[str, SemType] = {}
        self.types: dict[str, SemType] = {}
        self.operations: dict[str, TOperation] = {}
        self.current: Optional[TOperation] = None

    def const_env(self) -> ConstEnv:
        return ConstEnv(dict(self.unspecified), dict(self.const_values), dict(self.const_types))

    def run(self) -> None:
        for decl in self.spec.declarations:
            if decl.name in self.const_values or decl.name in self.types or decl.name in self.operations:
                raise _fail(f"{decl.name} is already declared", decl.span)
            match decl:
                case ValDecl():
                    self._constant(decl)
                case TypeDecl(name=name, type=type_expr):
                    self.types[name] = self.resolve_type(type_expr)
                case FunDecl() | PredDecl() | TheoremDecl() | ProcDecl():
                    self._operation(decl)

    # --- constants and types --------------------------------------------------

    def _constant(self, decl: ValDecl) -> None:
        if decl.value is None:
            if not isinstance(decl.type, NatTypeExpr) or decl.type.bound is not None:
                raise _fail(f"constant {decl.name} without a value must have type ℕ", decl.span)
            value = self.overrides.get(decl.name, self.default_value)
            self.unspecified[decl.name] = value
            self.const_values[decl.name] = value
            self.const_types[decl.name] = IntType(value, value)
            LOG.debug("constant %s = %d", decl.name, value)
            return
        typed = self.expr(decl.value, _Scope())
        value = self.evaluate(typed)
        sem_type = typed.type
        if decl.type is not None:
            if isinstance(decl.type, NatTypeExpr) and decl.type.bound is None:
                if not (isinstance(value, int) and not isinstance(value, bool) and value >= 0):
                    raise _fail(f"value {format_value(value)} of {decl.name} is not a natural number",
                                decl.span)
            else:
                declared: SemType = self.resolve_type(decl.type)
                if not compatible(sem_type, declared) or not contains(declared, value):
                    raise _fail(f"value {format_value(value)} of {decl.name} is not in type "
                                f"{format_type(declared)}", decl.span)
        if isinstance(value, int) and not isinstance(value, bool):
            sem_type = IntType(value, value)
        self.const_values[decl.name] = value
        self.const_types[decl.name] = sem_type

    def evaluate(self, typed: TExpr) -> Value:
        return det(typed)(Context())

    def constant_int(self, expr: Expr) -> int:
        typed = self.expr(expr, _Scope())
        if not isinstance(typed.type, IntType):
            raise _fail(f"expected an integer, found {format_type(typed.type)}", expr.span)
        value = self.evaluate(typed)
        assert isinstance(value, int)
        return value

    def resolve_type(self, type_expr: TypeExpr) -> SemType:
        match type_expr:
            case BoolTypeExpr():
                return BOOL
            case NatTypeExpr(bound=None, span=span):
                raise _fail("ℕ needs an upper bound here", span)
            case NatTypeExpr(bound=bound, span=span):
                assert bound is not None
                hi = self.constant_int(bound)
                if hi < 0:
                    raise _fail(f"empty type ℕ[{hi}]", span)
                return IntType(0, hi)
            case IntTypeExpr(lo=lo, hi=hi, span=span):
                low, high = self.constant_int(lo), self.constant_int(hi)
                if low > high:
                    raise _fail(f"empty type ℤ[{low},{high}]", span)
                return IntType(low, high)
            case SetTypeExpr(elem=elem):
                return SetType(self.resolve_type(elem))
            case TupleTypeExpr(elems=elems):
                return TupleType(tuple(self.resolve_type(e) for e in elems))
            case RecordTypeExpr(fields=fields, span=span):
                names = [name for name, _ in fields]
                if len(set(names)) != len(names):
                    raise _fail("duplicate record field", span)
                return RecordType(tuple((name, self.resolve_type(t)) for name, t in fields))
            case ArrayTypeExpr(length=length, elem=elem, span=span):
                size = self.constant_int(length)
                if size < 0:
                    raise _fail(f"negative array length {size}", span)
                return ArrayType(size, self.resolve_type(elem))
            case MapTypeExpr(dom=dom, cod=cod):
                return MapType(self.resolve_type(dom), self.resolve_type(cod))
            case NamedTypeExpr(name=name, span=span):
                if name not in self.types:
                    raise _fail(f"unknown type {name}", span)
                return self.types[name]
        raise TypeError(f"not a type expression: {type_expr!r}")

    # --- operations ------------------------------------------------------------

    def _operation(self, decl: OperationDecl) -> None:
        kind = {
            FunDecl: OperationKind.FUN,
            PredDecl: OperationKind.PRED,
            TheoremDecl: OperationKind.THEOREM,
            ProcDecl: OperationKind.PROC,
        }[type(decl)]
        params: list[TParam] = []
        scope = _Scope()
        for param in decl.params:
            if param.name in scope.variables:
                raise _fail(f"duplicate parameter {param.name}", param.span)
            sem_type = self.resolve_type(param.type)
            params.append(TParam(param.name, sem_type))
            scope.declare(param.name, sem_type)
        if isinstance(decl, (FunDecl, ProcDecl)):
            result = self.resolve_type(decl.result)
        else:
            result = BOOL
        op = TOperation(kind, decl.name, tuple(params), result, decl.span, decl)
        self.operations[decl.name] = op
        self.current = op
        try:
            self._contract_and_body(op, decl, scope)
            if op.recursive and op.nondet:
                # Self-calls were typed before the body was known to branch.
                self._contract_and_body(op, decl, scope)
        finally:
            self.current = None
        if op.recursive and op.decreases is None:
            raise MissingDecreases(op.name, decl.span)
        LOG.debug("typed %s %s (recursive=%s, nondeterministic=%s)",
                  kind.value, op.signature, op.recursive, op.nondet)
        if kind is OperationKind.THEOREM and not params and self.check_theorems:
            self._check_theorem(op)

    def _contract_and_body(self, op: TOperation, decl: OperationDecl, scope: _Scope) -> None:
        contract = decl.contract
        op.requires = tuple(self.annotation("requires", f, scope, BOOL) for f in contract.requires)
        if contract.decreases is not None:
            op.decreases = self.annotation("decreases", contract.decreases, scope, None)
        if isinstance(decl, ProcDecl):
            body_scope = scope.block()
            op.commands = tuple(self.command(c, body_scope) for c in decl.body)
            ret = self.expr(decl.ret, body_scope)
            self.expect_compatible(ret.type, op.result, decl.ret.span)
            op.ret = ret
            op.ret_text = f"return {print_expr(decl.ret)};"
            op.result_check = None if fits(ret.type, op.result) else op.result
            op.nondet = op.nondet or ret.nondet or any(c.nondet for c in op.commands)
        else:
            body = self.expr(decl.body, scope)
            self.expect_compatible(body.type, op.result, decl.body.span)
            op.body = body
            op.body_text = print_expr(decl.body)
            op.result_check = None if fits(body.type, op.result) else op.result
            op.nondet = op.nondet or body.nondet
        ensures_scope = scope.copy()
        ensures_scope.result = op.result
        op.ensures = tuple(self.annotation("ensures", f, ensures_scope, BOOL) for f in contract.ensures)

    def _check_theorem(self, op: TOperation) -> None:
        try:
            holds = invoke_operation(op, (), EvalMode.DETERMINISTIC, top=False).first()
        except RecursionError:
            raise RecursionTooDeep(op.span, op.body_text) from None
        if holds is False:
            raise TheoremFailed(op.name, op.span)
        LOG.debug("theorem %s holds", op.name)

    def annotation(self, keyword: str, expr: Expr, scope: _Scope,
                   expected: Optional[SemType]) -> TAnnotation:
        typed = self.expr(expr, scope)
        if expected is None:
            if not isinstance(typed.type, IntType):
                raise _fail(f"{keyword} needs an integer, found {format_type(typed.type)}", expr.span)
        else:
            self.expect_compatible(typed.type, expected, expr.span)
        return TAnnotation(typed, print_clause(keyword, expr), expr.span)

    def expect_compatible(self, actual: SemType, expected: SemType, span: SourceSpan) -> None:
        if not compatible(actual, expected):
            raise _fail(f"expected {format_type(expected)}, found {format_type(actual)}", span)

    def expect_bool(self, typed: TExpr, span: SourceSpan) -> TExpr:
        if not isinstance(typed.type, BoolType):
            raise _fail(f"expected Bool, found {format_type(typed.type)}", span)
        return typed

    def expect_int(self, typed: TExpr, span: SourceSpan) -> IntType:
        if not isinstance(typed.type, IntType):
            raise _fail(f"expected an integer, found {format_type(typed.type)}", span)
        return typed.type

    def expect_set(self, typed: TExpr, span: SourceSpan) -> SetType:
        if not isinstance(typed.type, SetType):
            raise _fail(f"expected a set, found {format_type(typed.type)}", span)
        return typed.type

    # --- expressions -----------------------------------------------------------

    def lookup(self, name: str, scope: _Scope, span: SourceSpan) -> TExpr:
        if name in scope.variables:
            return TVar(name, type=scope.variables[name], span=span)
        if name == RESULT and scope.result is not None:
            return TVar(name, type=scope.result, span=span)
        if scope.olds is not None and name.startswith(OLD_PREFIX):
            original = name[len(OLD_PREFIX):]
            if original in scope.variables:
                if original not in scope.olds:
                    scope.olds.append(original)
                return TVar(name, type=scope.variables[original], span=span)
        if name == FOR_SET and scope.for_set is not None:
            return TVar(name, type=scope.for_set, span=span)
        if name in self.const_values:
            return TConst(self.const_values[name], type=self.const_types[name], span=span)
        raise _fail(f"unknown name {name}", span)

    def binders(self, binders: tuple[Binder, ...], scope: _Scope) -> tuple[tuple[TBinder, ...], _Scope]:
        typed: list[TBinder] = []
        seen: set[str] = set()
        for binder in binders:
            if binder.name in seen:
                raise _fail(f"duplicate variable {binder.name}", binder.span)
            seen.add(binder.name)
            if binder.type is not None:
                sem_type = self.resolve_type(binder.type)
                typed.append(TBinder(binder.name, sem_type, None))
            else:
                assert binder.domain is not None
                domain = self.expr(binder.domain, scope)
                sem_type = self.expect_set(domain, binder.domain.span).elem
                typed.append(TBinder(binder.name, sem_type, domain))
            scope = scope.bind(binder.name, sem_type)
        return tuple(typed), scope

    def _filter(self, cond: Optional[Expr], scope: _Scope) -> Optional[TExpr]:
        if cond is None:
            return None
        return self.expect_bool(self.expr(cond, scope), cond.span)

    def expr(self, expr: Expr, scope: _Scope) -> TExpr:
        match expr:
            case IntLit(value=value, span=span):
                return TConst(value, type=IntType(value, value), span=span)
            case BoolLit(value=value, span=span):
                return TConst(value, type=BOOL, span=span)
            case Var(name=name, span=span):
                return self.lookup(name, scope, span)
            case Unary(op="¬", operand=operand, span=span):
                inner = self.expect_bool(self.expr(operand, scope), operand.span)
                return TUnary("¬", inner, type=BOOL, span=span, nondet=inner.nondet)
            case Unary(op=op, operand=operand, span=span):
                inner = self.expr(operand, scope)
                t = self.expect_int(inner, operand.span)
                return TUnary(op, inner, type=_interval(-t.hi, -t.lo), span=span, nondet=inner.nondet)
            case Binary():
                return self._binary(expr, scope)
            case Range(lo=lo, hi=hi, span=span):
                low, high = self.expr(lo, scope), self.expr(hi, scope)
                lt, ht = self.expect_int(low, lo.span), self.expect_int(high, hi.span)
                elem = IntType(lt.lo, max(lt.lo, ht.hi))
                return TRange(low, high, type=SetType(elem), span=span,
                              nondet=low.nondet or high.nondet)
            case Apply():
                return self._call(expr, scope)
            case TupleExpr(elems=elems, span=span):
                parts = tuple(self.expr(e, scope) for e in elems)
                return TTuple(parts, type=TupleType(tuple(p.type for p in parts)), span=span,
                              nondet=any(p.nondet for p in parts))
            case RecordExpr(fields=fields, span=span):
                names = tuple(name for name, _ in fields)
                if len(set(names)) != len(names):
                    raise _fail("duplicate record field", span)
                parts = tuple(self.expr(e, scope) for _, e in fields)
                record_type = RecordType(tuple((n, p.type) for n, p in zip(names, parts)))
                return TRecord(names, parts, type=record_type, span=span,
                               nondet=any(p.nondet for p in parts))
            case Select(expr=inner_expr, index=index, span=span):
                inner = self.expr(inner_expr, scope)
                if not isinstance(inner.type, TupleType):
                    raise _fail(f"expected a tuple, found {format_type(inner.type)}", span)
                if not 1 <= index <= len(inner.type.elems):
                    raise _fail(f"tuple has no component {index}", span)
                return TSelect(inner, index - 1, type=inner.type.elems[index - 1], span=span,
                               nondet=inner.nondet)
            case FieldSelect(expr=inner_expr, name=name, span=span):
                inner = self.expr(inner_expr, scope)
                if not isinstance(inner.type, RecordType) or name not in inner.type.names:
                    raise _fail(f"{format_type(inner.type)} has no field {name}", span)
                position = inner.type.field_index(name)
                return TSelect(inner, position, type=inner.type.fields[position][1], span=span,
                               nondet=inner.nondet)
            case Index(expr=inner_expr, index=index_expr, span=span):
                inner = self.expr(inner_expr, scope)
                index = self.expr(index_expr, scope)
                element = self._element_type(inner.type, index, span)
                return TIndex(inner, index, type=element, span=span,
                              nondet=inner.nondet or index.nondet)
            case ArrayInit(length=length, elem=elem, value=value_expr, span=span):
                size = self.constant_int(length)
                if size < 0:
                    raise _fail(f"negative array length {size}", span)
                elem_type = self.resolve_type(elem)
                value = self.expr(value_expr, scope)
                self.expect_compatible(value.type, elem_type, value_expr.span)
                check = None if fits(value.type, elem_type) else elem_type
                return TArrayInit(size, value, check, type=ArrayType(size, elem_type), span=span,
                                  nondet=value.nondet)
            case MapInit(dom=dom, cod=cod, value=value_expr, span=span):
                dom_type, cod_type = self.resolve_type(dom), self.resolve_type(cod)
                value = self.expr(value_expr, scope)
                self.expect_compatible(value.type, cod_type, value_expr.span)
                check = None if fits(value.type, cod_type) else cod_type
                return TMapInit(dom_type, value, check, type=MapType(dom_type, cod_type), span=span,
                                nondet=value.nondet)
            case SetLit(elems=elems, span=span):
                parts = tuple(self.expr(e, scope) for e in elems)
                elem_type = parts[0].type
                for part, source in zip(parts[1:], elems[1:]):
                    self.expect_compatible(part.type, elem_type, source.span)
                    elem_type = join(elem_type, part.type)
                return TSetLit(parts, type=SetType(elem_type), span=span,
                               nondet=any(p.nondet for p in parts))
            case EmptySet(elem=elem, span=span):
                return TConst(frozenset(), type=SetType(self.resolve_type(elem)), span=span)
            case Card(expr=inner_expr, span=span):
                inner = self.expr(inner_expr, scope)
                set_type = self.expect_set(inner, inner_expr.span)
                size = _safe_cardinality(set_type.elem)
                return TCard(inner, type=IntType(0, size), span=span, nondet=inner.nondet)
            case SetBuilder(expr=element_expr, binders=binders, cond=cond, span=span):
                typed_binders, inner_scope = self.binders(binders, scope)
                test = self._filter(cond, inner_scope)
                element = self.expr(element_expr, inner_scope)
                return TSetBuilder(element, typed_binders, test, type=SetType(element.type), span=span,
                                   nondet=element.nondet or _branches(typed_binders, test))
            case Quantified(quantifier=quantifier, binders=binders, cond=cond, body=body_expr, span=span):
                typed_binders, inner_scope = self.binders(binders, scope)
                test = self._filter(cond, inner_scope)
                body = self.expect_bool(self.expr(body_expr, inner_scope), body_expr.span)
                return TQuantified(quantifier == "∀", typed_binders, test, body, type=BOOL, span=span,
                                   nondet=body.nondet or _branches(typed_binders, test))
            case Sum(binders=binders, cond=cond, body=body_expr, span=span):
                typed_binders, inner_scope = self.binders(binders, scope)
                test = self._filter(cond, inner_scope)
                body = self.expr(body_expr, inner_scope)
                term = self.expect_int(body, body_expr.span)
                count = 1
                for binder in typed_binders:
                    count = min(count * _safe_cardinality(binder.type), COUNT_LIMIT)
                sum_type = _interval(min(0, count * term.lo), max(0, count * term.hi))
                return TSum(typed_binders, test, body, type=sum_type, span=span,
                            nondet=body.nondet or _branches(typed_binders, test))
            case Choose(binders=binders, cond=cond, span=span):
                typed_binders, inner_scope = self.binders(binders, scope)
                test = self._filter(cond, inner_scope)
                if len(typed_binders) == 1:
                    chosen: SemType = typed_binders[0].type
                else:
                    chosen = TupleType(tuple(b.type for b in typed_binders))
                return TChoose(typed_binders, test, print_expr(expr), type=chosen, span=span, nondet=True)
            case IfExpr(cond=cond_expr, then=then_expr, else_=else_expr, span=span):
                cond = self.expect_bool(self.expr(cond_expr, scope), cond_expr.span)
                then, else_ = self.expr(then_expr, scope), self.expr(else_expr, scope)
                self.expect_compatible(else_.type, then.type, else_expr.span)
                return TIf(cond, then, else_, type=join(then.type, else_.type), span=span,
                           nondet=cond.nondet or then.nondet or else_.nondet)
            case Let(name=name, value=value_expr, body=body_expr, span=span):
                value = self.expr(value_expr, scope)
                body = self.expr(body_expr, scope.bind(name, value.type))
                return TLet(name, value, body, type=body.type, span=span,
                            nondet=value.nondet or body.nondet)
            case Print(expr=inner_expr, span=span):
                inner = self.expr(inner_expr, scope)
                return TPrint(inner, type=inner.type, span=span, nondet=inner.nondet)
        raise TypeError(f"not an expression: {expr!r}")

    def _element_type(self, container: SemType, index: TExpr, span: SourceSpan) -> SemType:
        if isinstance(container, ArrayType):
            self.expect_int(index, span)
            return container.elem
        if isinstance(container, MapType):
            self.expect_compatible(index.type, container.dom, span)
            return container.cod
        raise _fail(f"cannot index a value of type {format_type(container)}", span)

    def _binary(self, expr: Binary, scope: _Scope) -> TExpr:
        op, span = expr.op, expr.span
        left, right = self.expr(expr.left, scope), self.expr(expr.right, scope)
        nondet = left.nondet or right.nondet

        def node(sem_type: SemType) -> TExpr:
            return TBinary(op, left, right, type=sem_type, span=span, nondet=nondet)

        if op in _CONNECTIVES:
            self.expect_bool(left, expr.left.span)
            self.expect_bool(right, expr.right.span)
            return node(BOOL)
        if op in ("=", "≠"):
            self.expect_compatible(right.type, left.type, expr.right.span)
            return node(BOOL)
        if op in _ORDERING:
            self.expect_int(left, expr.left.span)
            self.expect_int(right, expr.right.span)
            return node(BOOL)
        if op == "∈":
            set_type = self.expect_set(right, expr.right.span)
            self.expect_compatible(left.type, set_type.elem, expr.left.span)
            return node(BOOL)
        if op == "⊆":
            self.expect_set(left, expr.left.span)
            self.expect_set(right, expr.right.span)
            self.expect_compatible(right.type, left.type, expr.right.span)
            return node(BOOL)
        if op in _SET_OPERATIONS:
            self.expect_set(left, expr.left.span)
            self.expect_set(right, expr.right.span)
            self.expect_compatible(right.type, left.type, expr.right.span)
            return node(left.type if op == "\\" else join(left.type, right.type))
        if op in _ARITHMETIC:
            a = self.expect_int(left, expr.left.span)
            b = self.expect_int(right, expr.right.span)
            return node(_arithmetic_range(op, a, b))
        raise _fail(f"unknown operator {op}", span)

    def _call(self, expr: Apply, scope: _Scope) -> TExpr:
        target = self.operations.get(expr.name)
        if target is None:
            raise _fail(f"unknown operation {expr.name}", expr.span)
        if len(expr.args) != len(target.params):
            raise ArityMismatch(
                f"{expr.name} takes {len(target.params)} arguments, {len(expr.args)} given", expr.span)
        args = tuple(self.expr(a, scope) for a in expr.args)
        checks: list[Optional[SemType]] = []
        for arg, source, param in zip(args, expr.args, target.params):
            self.expect_compatible(arg.type, param.type, source.span)
            checks.append(None if fits(arg.type, param.type) else param.type)
        if target is self.current:
            target.recursive = True
        return TCall(target, args, tuple(checks), print_expr(expr), type=target.result, span=expr.span,
                     nondet=target.nondet or any(a.nondet for a in args))

    # --- commands --------------------------------------------------------------

    def loop(self, spec: LoopSpec, scope: _Scope) -> TLoop:
        olds: list[str] = []
        annotation_scope = scope.copy()
        annotation_scope.olds = olds
        invariants = tuple(self.annotation("invariant", f, annotation_scope, BOOL) for f in spec.invariants)
        decreases = None
        if spec.decreases is not None:
            decreases = self.annotation("decreases", spec.decreases, annotation_scope, None)
        return TLoop(invariants, decreases, tuple(olds))

    def _declare(self, name: str, scope: _Scope, span: SourceSpan) -> None:
        if name in scope.variables:
            raise _fail(f"variable {name} is already declared", span)

    def command(self, cmd: Cmd, scope: _Scope) -> TCmd:
        """Type ``cmd``; declarations it makes are added to ``scope``."""
        text = _first_line(cmd)
        match cmd:
            case VarDecl():
                return self._var_decl(cmd, scope)
            case Assign():
                return self._assign(cmd, scope)
            case Block(cmds=cmds, span=span):
                inner = scope.block()
                parts = tuple(self.command(c, inner) for c in cmds)
                return TBlock(parts, span=span, text=text, nondet=any(p.nondet for p in parts))
            case If(cond=cond_expr, then=then_cmd, else_=else_cmd, span=span):
                cond = self.expect_bool(self.expr(cond_expr, scope), cond_expr.span)
                then = self.command(then_cmd, scope.block())
                else_ = self.command(else_cmd, scope.block()) if else_cmd is not None else None
                nondet = cond.nondet or then.nondet or (else_ is not None and else_.nondet)
                return TIfCmd(cond, then, else_, span=span, text=text, nondet=nondet)
            case While(cond=cond_expr, loop=loop_spec, body=body_cmd, span=span):
                cond = self.expect_bool(self.expr(cond_expr, scope), cond_expr.span)
                loop = self.loop(loop_spec, scope)
                body = self.command(body_cmd, scope.block())
                return TWhile(cond, loop, body, span=span, text=text,
                              nondet=cond.nondet or body.nondet)
            case For(init=init_cmd, cond=cond_expr, update=update_cmd, loop=loop_spec, body=body_cmd,
                     span=span):
                loop_scope = scope.block()
                init = self._var_decl(init_cmd, loop_scope)
                cond = self.expect_bool(self.expr(cond_expr, loop_scope), cond_expr.span)
                update = self._assign(update_cmd, loop_scope)
                loop = self.loop(loop_spec, loop_scope)
                body = self.command(body_cmd, loop_scope.block())
                nondet = init.nondet or cond.nondet or update.nondet or body.nondet
                return TFor(init, cond, update, loop, body, span=span, text=text, nondet=nondet)
            case ForIn(name=name, domain=domain_expr, cond=cond_expr, loop=loop_spec, body=body_cmd,
                       span=span):
                self._declare(name, scope, span)
                domain = self.expr(domain_expr, scope)
                set_type = self.expect_set(domain, domain_expr.span)
                cond = self._filter(cond_expr, scope.bind(name, set_type.elem))
                loop_scope = scope.block()
                loop_scope.for_set = set_type
                loop = self.loop(loop_spec, loop_scope)
                body = self.command(body_cmd, loop_scope.bind(name, set_type.elem))
                return TForIn(name, domain, cond, loop, body, span=span, text=text, nondet=True)
            case ChooseCmd(binders=binders, cond=cond_expr, span=span):
                for binder in binders:
                    self._declare(binder.name, scope, binder.span)
                typed_binders, inner = self.binders(binders, scope)
                cond = self._filter(cond_expr, inner)
                for binder in typed_binders:
                    scope.declare(binder.name, binder.type, assignable=True)
                return TChooseCmd(typed_binders, cond, span=span, text=text, nondet=True)
            case ChooseElse(binders=binders, cond=cond_expr, then=then_cmd, else_=else_cmd, span=span):
                for binder in binders:
                    self._declare(binder.name, scope, binder.span)
                typed_binders, inner = self.binders(binders, scope)
                cond = self._filter(cond_expr, inner)
                then_scope = scope.block()
                for binder in typed_binders:
                    then_scope.declare(binder.name, binder.type, assignable=True)
                then = self.command(then_cmd, then_scope)
                else_ = self.command(else_cmd, scope.block())
                return TChooseElse(typed_binders, cond, then, else_, span=span, text=text, nondet=True)
            case ChooseDo(binders=binders, cond=cond_expr, loop=loop_spec, body=body_cmd, span=span):
                for binder in binders:
                    self._declare(binder.name, scope, binder.span)
                typed_binders, inner = self.binders(binders, scope)
                cond = self._filter(cond_expr, inner)
                loop = self.loop(loop_spec, scope.block())
                body_scope = scope.block()
                for binder in typed_binders:
                    body_scope.declare(binder.name, binder.type)
                body = self.command(body_cmd, body_scope)
                return TChooseDo(typed_binders, cond, loop, body, span=span, text=text, nondet=True)
            case Assert(formula=formula_expr, span=span):
                formula = self.expect_bool(self.expr(formula_expr, scope), formula_expr.span)
                return TAssert(formula, span=span, text=text, nondet=formula.nondet)
            case PrintCmd(expr=printed_expr, span=span):
                printed = self.expr(printed_expr, scope)
                return TPrintCmd(printed, span=span, text=text, nondet=printed.nondet)
        raise TypeError(f"not a command: {cmd!r}")

    def _var_decl(self, cmd: VarDecl, scope: _Scope) -> TVarDecl:
        self._declare(cmd.name, scope, cmd.span)
        declared = self.resolve_type(cmd.type)
        init = self.expr(cmd.init, scope)
        self.expect_compatible(init.type, declared, cmd.init.span)
        scope.declare(cmd.name, declared, assignable=True)
        check = None if fits(init.type, declared) else declared
        return TVarDecl(cmd.name, init, check, span=cmd.span, text=_first_line(cmd), nondet=init.nondet)

    def _assign(self, cmd: Assign, scope: _Scope) -> TAssign:
        if cmd.name not in scope.variables:
            raise _fail(f"unknown variable {cmd.name}", cmd.span)
        if cmd.name not in scope.assignable:
            raise _fail(f"{cmd.name} cannot be assigned", cmd.span)
        target = scope.variables[cmd.name]
        path: list[TIndexStep] = []
        for index_expr in cmd.indices:
            index = self.expr(index_expr, scope)
            container = target
            target = self._element_type(container, index, index_expr.span)
            path.append(TIndexStep(index, container))
        value = self.expr(cmd.value, scope)
        self.expect_compatible(value.type, target, cmd.value.span)
        check = None if fits(value.type, target) else target
        nondet = value.nondet or any(step.index.nondet for step in path)
        return TAssign(cmd.name, tuple(path), value, check, span=cmd.span, text=_first_line(cmd),
                       nondet=nondet)


def _branches(binders: tuple[TBinder, ...], cond: Optional[TExpr]) -> bool:
    # A choice inside a binder domain or filter still counts as a
    # nondeterministic construct of the enclosing phrase.
    return (cond is not None and cond.nondet) or any(
        b.domain is not None and b.domain.nondet for b in binders
    )


def _arithmetic_range(op: str, a: IntType, b: IntType) -> IntType:
    match op:
        case "+":
            return _interval(a.lo + b.lo, a.hi + b.hi)
        case "-":
            return _interval(a.lo - b.hi, a.hi - b.lo)
        case "·":
            products = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi]
            return _interval(min(products), max(products))
        case "/":
            magnitude = max(abs(a.lo), abs(a.hi)) + 1
            return _interval(-magnitude, magnitude)
        case "%":
            divisor = max(abs(b.lo), abs(b.hi), 1)
            return IntType(0, divisor - 1)
        case "^":
            return _power_range(a, b)
    raise ValueError(f"not an arithmetic operator: {op}")


def _power_range(base: IntType, exponent: IntType) -> IntType:
    magnitude = max(abs(base.lo), abs(base.hi))
    top = max(exponent.hi, 0)
    if magnitude > 1 and top * magnitude.bit_length() > MAX_INT_BITS:
        bound = _INT_LIMIT
    else:
        bound = max(magnitude**top, 1)
    if base.lo >= 0:
        return IntType(0, bound)
    return _interval(-bound, bound)

