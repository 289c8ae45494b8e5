"""Typed, name-resolved form of a specification.

Every expression node carries its static SemType, the span and source AST
node it came from, and whether evaluating it may branch (``nondet``). The
evaluator compiles these nodes into closures and caches them on the node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional, Union

from fspec.models import Decl, SourceSpan, Spec
from fspec.semtypes import SemType, format_signature_type
from fspec.values import Value


@dataclass(eq=False, kw_only=True)
class TExpr:
    type: SemType
    span: SourceSpan
    nondet: bool = False
    det_fn: Optional[Callable[..., Any]] = field(default=None, init=False, repr=False)
    nd_fn: Optional[Callable[..., Any]] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class TConst(TExpr):
    value: Value


@dataclass(eq=False)
class TVar(TExpr):
    name: str


@dataclass(eq=False)
class TUnary(TExpr):
    op: str
    operand: TExpr


@dataclass(eq=False)
class TBinary(TExpr):
    op: str
    left: TExpr
    right: TExpr


@dataclass(eq=False)
class TCall(TExpr):
    """Call of an operation; ``checks[i]`` is the parameter type when the
    argument needs a runtime range check."""

    target: TOperation
    args: tuple[TExpr, ...]
    checks: tuple[Optional[SemType], ...]
    text: str


@dataclass(eq=False)
class TTuple(TExpr):
    elems: tuple[TExpr, ...]


@dataclass(eq=False)
class TRecord(TExpr):
    names: tuple[str, ...]
    elems: tuple[TExpr, ...]


@dataclass(eq=False)
class TSelect(TExpr):
    """Tuple projection or record field access by 0-based position."""

    expr: TExpr
    position: int


@dataclass(eq=False)
class TIndex(TExpr):
    """``a[i]`` on an array or a map; ``expr.type`` tells which."""

    expr: TExpr
    index: TExpr


@dataclass(eq=False)
class TArrayInit(TExpr):
    length: int
    value: TExpr
    check: Optional[SemType]


@dataclass(eq=False)
class TMapInit(TExpr):
    dom: SemType
    value: TExpr
    check: Optional[SemType]


@dataclass(eq=False)
class TSetLit(TExpr):
    elems: tuple[TExpr, ...]


@dataclass(eq=False)
class TRange(TExpr):
    lo: TExpr
    hi: TExpr


@dataclass(eq=False)
class TCard(TExpr):
    expr: TExpr


@dataclass(eq=False)
class TBinder:
    """``name:type`` when ``domain`` is None, otherwise ``name∈domain``."""

    name: str
    type: SemType
    domain: Optional[TExpr]


@dataclass(eq=False)
class TSetBuilder(TExpr):
    expr: TExpr
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]


@dataclass(eq=False)
class TQuantified(TExpr):
    universal: bool
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]
    body: TExpr


@dataclass(eq=False)
class TSum(TExpr):
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]
    body: TExpr


@dataclass(eq=False)
class TChoose(TExpr):
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]
    text: str


@dataclass(eq=False)
class TIf(TExpr):
    cond: TExpr
    then: TExpr
    else_: TExpr


@dataclass(eq=False)
class TLet(TExpr):
    name: str
    value: TExpr
    body: TExpr


@dataclass(eq=False)
class TPrint(TExpr):
    expr: TExpr


# --- annotations and commands ------------------------------------------------


@dataclass(eq=False)
class TAnnotation:
    """A checked formula or measure with the source text quoted in errors."""

    expr: TExpr
    text: str
    span: SourceSpan


@dataclass(eq=False)
class TLoop:
    invariants: tuple[TAnnotation, ...] = ()
    decreases: Optional[TAnnotation] = None
    # Variables whose entry values the invariants read as ``old_<name>``.
    old_names: tuple[str, ...] = ()


@dataclass(eq=False, kw_only=True)
class TCmd:
    span: SourceSpan
    text: str
    nondet: bool = False
    det_fn: Optional[Callable[..., Any]] = field(default=None, init=False, repr=False)
    nd_fn: Optional[Callable[..., Any]] = field(default=None, init=False, repr=False)


@dataclass(eq=False)
class TVarDecl(TCmd):
    name: str
    init: TExpr
    check: Optional[SemType]


@dataclass(eq=False)
class TIndexStep:
    """One ``[i]`` of an assignment target; ``container`` is the indexed type."""

    index: TExpr
    container: SemType


@dataclass(eq=False)
class TAssign(TCmd):
    name: str
    path: tuple[TIndexStep, ...]
    value: TExpr
    check: Optional[SemType]


@dataclass(eq=False)
class TBlock(TCmd):
    cmds: tuple[TCmd, ...]


@dataclass(eq=False)
class TIfCmd(TCmd):
    cond: TExpr
    then: TCmd
    else_: Optional[TCmd]


@dataclass(eq=False)
class TWhile(TCmd):
    cond: TExpr
    loop: TLoop
    body: TCmd


@dataclass(eq=False)
class TFor(TCmd):
    init: TVarDecl
    cond: TExpr
    update: TAssign
    loop: TLoop
    body: TCmd


@dataclass(eq=False)
class TForIn(TCmd):
    name: str
    domain: TExpr
    cond: Optional[TExpr]
    loop: TLoop
    body: TCmd


@dataclass(eq=False)
class TChooseCmd(TCmd):
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]


@dataclass(eq=False)
class TChooseElse(TCmd):
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]
    then: TCmd
    else_: TCmd


@dataclass(eq=False)
class TChooseDo(TCmd):
    binders: tuple[TBinder, ...]
    cond: Optional[TExpr]
    loop: TLoop
    body: TCmd


@dataclass(eq=False)
class TAssert(TCmd):
    formula: TExpr


@dataclass(eq=False)
class TPrintCmd(TCmd):
    expr: TExpr


# --- operations ----------------------------------------------------------------


class OperationKind(Enum):
    FUN = "function"
    PRED = "predicate"
    THEOREM = "theorem"
    PROC = "procedure"


@dataclass(frozen=True)
class TParam:
    name: str
    type: SemType


@dataclass(eq=False)
class TOperation:
    """A function, predicate, theorem or procedure ready for execution.

    Functions, predicates and theorems have an expression ``body``;
    procedures have ``commands`` followed by the ``ret`` expression.
    ``result_check`` is the result type when the body's static type does not
    already fit it.
    """

    kind: OperationKind
    name: str
    params: tuple[TParam, ...]
    result: SemType
    span: SourceSpan
    decl: Decl
    requires: tuple[TAnnotation, ...] = ()
    ensures: tuple[TAnnotation, ...] = ()
    decreases: Optional[TAnnotation] = None
    body: Optional[TExpr] = None
    body_text: str = ""
    commands: tuple[TCmd, ...] = ()
    ret: Optional[TExpr] = None
    ret_text: str = ""
    result_check: Optional[SemType] = None
    recursive: bool = False
    nondet: bool = False
    compiled: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def signature(self) -> str:
        """``gcd(ℤ,ℤ)``: parameter types with ranges erased."""
        return f"{self.name}({','.join(format_signature_type(p.type) for p in self.params)})"

    @property
    def param_types(self) -> tuple[SemType, ...]:
        return tuple(p.type for p in self.params)


@dataclass(frozen=True)
class ConstEnv:
    """Values of all global constants.

    ``unspecified`` maps each ``val I: ℕ;`` constant to the value it received;
    ``values`` holds every constant (unspecified and defined) in declaration
    order.
    """

    unspecified: dict[str, int]
    values: dict[str, Value]
    types: dict[str, SemType]


@dataclass(eq=False)
class TypedSpec:
    spec: Spec
    consts: ConstEnv
    types: dict[str, SemType]
    operations: dict[str, TOperation]

    def operation(self, name: str) -> TOperation:
        try:
            return self.operations[name]
        except KeyError:
            raise KeyError(f"no operation named {name}") from None


TypedNode = Union[TExpr, TCmd]
