from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan("<generated>", 1, 1, 0)


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    INTEGER = "integer-literal"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"
    END = "end-of-file"


class Symbol(Enum):
    """Symbols with a canonical Unicode spelling and their ASCII aliases."""

    FORALL = ("∀", frozenset({"forall"}), TokenKind.OPERATOR)
    EXISTS = ("∃", frozenset({"exists"}), TokenKind.OPERATOR)
    SUM = ("∑", frozenset({"sum"}), TokenKind.OPERATOR)
    IFF = ("⇔", frozenset({"<=>"}), TokenKind.OPERATOR)
    IMPLIES = ("⇒", frozenset({"=>"}), TokenKind.OPERATOR)
    AND = ("∧", frozenset({"/\\", "&&"}), TokenKind.OPERATOR)
    OR = ("∨", frozenset({"\\/", "||"}), TokenKind.OPERATOR)
    NOT = ("¬", frozenset({"~"}), TokenKind.OPERATOR)
    NOT_EQUAL = ("≠", frozenset({"~="}), TokenKind.OPERATOR)
    LESS_EQUAL = ("≤", frozenset({"<="}), TokenKind.OPERATOR)
    GREATER_EQUAL = ("≥", frozenset({">="}), TokenKind.OPERATOR)
    IN = ("∈", frozenset({"in"}), TokenKind.OPERATOR)
    SUBSET = ("⊆", frozenset({"subseteq"}), TokenKind.OPERATOR)
    UNION = ("∪", frozenset({"union"}), TokenKind.OPERATOR)
    INTERSECT = ("∩", frozenset({"intersect"}), TokenKind.OPERATOR)
    EMPTY_SET = ("∅", frozenset({"emptyset"}), TokenKind.KEYWORD)
    TIMES = ("·", frozenset({"*"}), TokenKind.OPERATOR)
    NAT = ("ℕ", frozenset({"Nat"}), TokenKind.KEYWORD)
    INT = ("ℤ", frozenset({"Int"}), TokenKind.KEYWORD)
    TUPLE_OPEN = ("⟨", frozenset({"(|"}), TokenKind.PUNCTUATION)
    TUPLE_CLOSE = ("⟩", frozenset({"|)"}), TokenKind.PUNCTUATION)
    TRUE = ("⊤", frozenset({"true"}), TokenKind.KEYWORD)
    FALSE = ("⊥", frozenset({"false"}), TokenKind.KEYWORD)
    MINUS = ("-", frozenset({"−"}), TokenKind.OPERATOR)

    @property
    def text(self) -> str:
        return self.value[0]

    @property
    def alias_set(self) -> frozenset[str]:
        return self.value[1]

    @property
    def kind(self) -> TokenKind:
        return self.value[2]

    @classmethod
    def from_string(cls, lexeme: str) -> "Symbol":
        """Look up a symbol by its Unicode spelling or one of its aliases.

        Raises:
            ValueError: If the lexeme names no symbol.
        """
        for symbol in cls:
            if lexeme == symbol.text or lexeme in symbol.alias_set:
                return symbol
        raise ValueError(f"Unknown symbol: {lexeme}")


KEYWORDS = frozenset({
    "val", "type", "fun", "pred", "theorem", "proc",
    "requires", "ensures", "decreases", "invariant",
    "var", "if", "then", "else", "while", "for", "do",
    "choose", "with", "let", "return", "assert", "print",
    "Bool", "Set", "Tuple", "Record", "Array", "Map",
})

# ASCII operators and punctuation without a Unicode counterpart.
PLAIN_OPERATORS = frozenset({"=", "<", ">", "+", "%", "/", "^", "\\"})
PLAIN_PUNCTUATION = frozenset({"(", ")", "[", "]", "{", "}", ",", ";", ":", ".", ":=", "..", "|"})


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan

    def is_(self, *texts: str) -> bool:
        return self.kind is not TokenKind.IDENTIFIER and self.kind is not TokenKind.INTEGER \
            and self.text in texts


def _span() -> SourceSpan:
    return field(default=NO_SPAN, compare=False, kw_only=True, repr=False)  # type: ignore[return-value]


# --- type expressions -----------------------------------------------------


@dataclass(frozen=True)
class BoolTypeExpr:
    span: SourceSpan = _span()


@dataclass(frozen=True)
class NatTypeExpr:
    bound: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class IntTypeExpr:
    lo: Expr
    hi: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetTypeExpr:
    elem: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TupleTypeExpr:
    elems: tuple[TypeExpr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class RecordTypeExpr:
    fields: tuple[tuple[str, TypeExpr], ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ArrayTypeExpr:
    length: Expr
    elem: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class MapTypeExpr:
    dom: TypeExpr
    cod: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class NamedTypeExpr:
    name: str
    span: SourceSpan = _span()


TypeExpr = Union[
    BoolTypeExpr, NatTypeExpr, IntTypeExpr, SetTypeExpr, TupleTypeExpr,
    RecordTypeExpr, ArrayTypeExpr, MapTypeExpr, NamedTypeExpr,
]


# --- expressions ----------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Apply:
    name: str
    args: tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TupleExpr:
    elems: tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class RecordExpr:
    fields: tuple[tuple[str, Expr], ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Select:
    """Tuple projection ``e.k`` with a 1-based ``k``."""

    expr: Expr
    index: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FieldSelect:
    expr: Expr
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Index:
    expr: Expr
    index: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ArrayInit:
    length: Expr
    elem: TypeExpr
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class MapInit:
    dom: TypeExpr
    cod: TypeExpr
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetLit:
    elems: tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class EmptySet:
    elem: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Range:
    lo: Expr
    hi: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Card:
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binder:
    """``x:T`` when ``type`` is set, ``x∈e`` when ``domain`` is set."""

    name: str
    type: Optional[TypeExpr] = None
    domain: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetBuilder:
    expr: Expr
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Quantified:
    quantifier: str
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Sum:
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Choose:
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class IfExpr:
    cond: Expr
    then: Expr
    else_: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Print:
    expr: Expr
    span: SourceSpan = _span()


Expr = Union[
    IntLit, BoolLit, Var, Unary, Binary, Apply, TupleExpr, RecordExpr, Select,
    FieldSelect, Index, ArrayInit, MapInit, SetLit, EmptySet, Range, Card,
    SetBuilder, Quantified, Sum, Choose, IfExpr, Let, Print,
]


# --- commands -------------------------------------------------------------


@dataclass(frozen=True)
class LoopSpec:
    invariants: tuple[Expr, ...] = ()
    decreases: Optional[Expr] = None


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: TypeExpr
    init: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assign:
    name: str
    indices: tuple[Expr, ...]
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Block:
    cmds: tuple[Cmd, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Cmd
    else_: Optional[Cmd]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    loop: LoopSpec
    body: Cmd
    span: SourceSpan = _span()


@dataclass(frozen=True)
class For:
    init: VarDecl
    cond: Expr
    update: Assign
    loop: LoopSpec
    body: Cmd
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ForIn:
    name: str
    domain: Expr
    cond: Optional[Expr]
    loop: LoopSpec
    body: Cmd
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ChooseCmd:
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ChooseElse:
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    then: Cmd
    else_: Cmd
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ChooseDo:
    binders: tuple[Binder, ...]
    cond: Optional[Expr]
    loop: LoopSpec
    body: Cmd
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assert:
    formula: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PrintCmd:
    expr: Expr
    span: SourceSpan = _span()


Cmd = Union[
    VarDecl, Assign, Block, If, While, For, ForIn, ChooseCmd, ChooseElse,
    ChooseDo, Assert, PrintCmd,
]


# --- declarations ---------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Contract:
    requires: tuple[Expr, ...] = ()
    ensures: tuple[Expr, ...] = ()
    decreases: Optional[Expr] = None


@dataclass(frozen=True)
class ValDecl:
    name: str
    type: Optional[TypeExpr]
    value: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FunDecl:
    name: str
    params: tuple[Param, ...]
    result: TypeExpr
    contract: Contract
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class PredDecl:
    name: str
    params: tuple[Param, ...]
    contract: Contract
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TheoremDecl:
    name: str
    params: tuple[Param, ...]
    contract: Contract
    body: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ProcDecl:
    name: str
    params: tuple[Param, ...]
    result: TypeExpr
    contract: Contract
    body: tuple[Cmd, ...]
    ret: Expr
    span: SourceSpan = _span()


Decl = Union[ValDecl, TypeDecl, FunDecl, PredDecl, TheoremDecl, ProcDecl]
OperationDecl = Union[FunDecl, PredDecl, TheoremDecl, ProcDecl]


@dataclass(frozen=True)
class Spec:
    declarations: tuple[Decl, ...] = ()

    def find(self, name: str) -> Optional[Decl]:
        for decl in self.declarations:
            if decl.name == name:
                return decl
        return None
