from __future__ import annotations

from typing import Callable, Optional, Sequence, TypeVar

from fspec.errors import ParseError
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
    Contract,
    Decl,
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
    Param,
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
    Token,
    TokenKind,
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

RELATIONAL = ("=", "≠", "<", "≤", ">", "≥", "∈", "⊆")
ADDITIVE = ("+", "-", "∪", "\\")
MULTIPLICATIVE = ("·", "%", "/", "∩")

# Tokens that end a phrase. A missing one is reported right after the phrase,
# not at the start of the next line.
CLOSERS = frozenset({";", ",", ")", "]", "}", "⟩", "then", "else", "do", "∈", "."})

T = TypeVar("T")


def parse_spec(tokens: Sequence[Token]) -> Spec:
    """Parse a token stream (as produced by ``tokenize``) into a Spec.

    Raises:
        ParseError: At the first token that does not fit the grammar, or at
            a block whose closing brace is indented differently when that
            brace comes before the failure.
    """
    parser = _Parser(tokens)
    return parser.run(parser.spec)


def parse_expression(tokens: Sequence[Token]) -> Expr:
    """Parse a single expression spanning the whole token stream."""
    parser = _Parser(tokens)

    def whole() -> Expr:
        expr = parser.expr()
        parser.expect_end()
        return expr
    return parser.run(whole)


def _misaligned_block(tokens: Sequence[Token], limit: int) -> Optional[ParseError]:
    """The first block up to ``tokens[limit]`` closed by a brace on another indentation.

    A closing brace only counts when it starts its line; the indentation of
    an opening brace is that of the first token on its line.
    """
    indent: dict[int, int] = {}
    for tok in tokens:
        indent.setdefault(tok.span.line, tok.span.column)
    opened: list[Token] = []
    for tok in tokens[:limit + 1]:
        if tok.kind in (TokenKind.IDENTIFIER, TokenKind.INTEGER, TokenKind.END):
            continue
        if tok.text == "{":
            opened.append(tok)
        elif tok.text == "}":
            if not opened:
                return None
            opener = opened.pop()
            line = tok.span.line
            if line != opener.span.line and indent[line] == tok.span.column \
                    and indent[opener.span.line] != tok.span.column:
                return ParseError(
                    opener.span, "'}'", ("}",),
                    f"block is closed by '}}' at line {line} with a different indentation",
                )
    return None


class _Parser:
    def __init__(self, tokens: Sequence[Token]) -> None:
        if not tokens or tokens[-1].kind is not TokenKind.END:
            end_span = tokens[-1].span if tokens else SourceSpan("<input>", 1, 1)
            tokens = [*tokens, Token(TokenKind.END, "", end_span)]
        self._tokens = tokens
        self._pos = 0
        # While set, "∈" ends an expression (the "in" of a let definition).
        self._stop_at_in = False
        # Position of the first token of the annotation clause being parsed.
        self._clause_start: Optional[int] = None

    def run(self, parse: Callable[[], T]) -> T:
        try:
            return parse()
        except ParseError as error:
            raise _misaligned_block(self._tokens, self._pos) or error
        except RecursionError:
            tok = self._tok
            raise ParseError(tok.span, repr(tok.text), (), "phrase is nested too deeply") from None

    # --- token helpers -----------------------------------------------------

    @property
    def _tok(self) -> Token:
        return self._tokens[self._pos]

    def _peek(self, offset: int = 1) -> Token:
        index = min(self._pos + offset, len(self._tokens) - 1)
        return self._tokens[index]

    def _at(self, *texts: str) -> bool:
        tok = self._tok
        if self._clause_start is not None and self._pos > self._clause_start and self._at_margin():
            return False
        return tok.kind not in (TokenKind.IDENTIFIER, TokenKind.INTEGER, TokenKind.END) \
            and tok.text in texts

    def _at_margin(self) -> bool:
        """The current token starts a line in the first column."""
        tok = self._tok
        return self._pos > 0 and tok.span.column == 1 \
            and tok.span.line > self._tokens[self._pos - 1].span.line

    def _advance(self) -> Token:
        tok = self._tok
        if tok.kind is not TokenKind.END:
            self._pos += 1
        return tok

    def _accept(self, *texts: str) -> Optional[Token]:
        if self._at(*texts):
            return self._advance()
        return None

    def _fail(self, *expected: str) -> ParseError:
        tok = self._tok
        found = "end of file" if tok.kind is TokenKind.END else repr(tok.text)
        span = tok.span
        if self._pos > 0 and CLOSERS.intersection(expected):
            prev = self._tokens[self._pos - 1].span
            if span.line > prev.line:
                span = SourceSpan(prev.file, prev.line, prev.column + prev.length)
        return ParseError(span, found, expected)

    def expect(self, *texts: str) -> Token:
        if self._at(*texts):
            return self._advance()
        raise self._fail(*texts)

    def expect_identifier(self) -> Token:
        if self._tok.kind is TokenKind.IDENTIFIER:
            return self._advance()
        raise self._fail("identifier")

    def expect_end(self) -> None:
        if self._tok.kind is not TokenKind.END:
            raise self._fail("end of file")

    def _nested(self, parse: Callable[[], Expr]) -> Expr:
        saved, clause = self._stop_at_in, self._clause_start
        self._stop_at_in, self._clause_start = False, None
        try:
            return parse()
        finally:
            self._stop_at_in, self._clause_start = saved, clause

    def _clause(self) -> Expr:
        """An annotation formula; it does not continue on a line starting in the first column."""
        saved = self._clause_start
        self._clause_start = self._pos
        try:
            return self.expr()
        finally:
            self._clause_start = saved

    # --- declarations ------------------------------------------------------

    def spec(self) -> Spec:
        declarations: list[Decl] = []
        while self._tok.kind is not TokenKind.END:
            declarations.append(self.declaration())
        return Spec(tuple(declarations))

    def declaration(self) -> Decl:
        if self._accept("val"):
            name = self.expect_identifier()
            type_: Optional[TypeExpr] = None
            value: Optional[Expr] = None
            if self._accept(":"):
                type_ = self.type_expr(allow_unbounded=True)
            if self._accept("="):
                value = self.expr()
            self.expect(";")
            return ValDecl(name.text, type_, value, span=name.span)
        if self._accept("type"):
            name = self.expect_identifier()
            self.expect("=")
            type_expr = self.type_expr()
            self.expect(";")
            return TypeDecl(name.text, type_expr, span=name.span)
        if self._accept("pred"):
            name = self.expect_identifier()
            params = self.params()
            contract = self.contract()
            self.expect("⇔")
            body = self.expr()
            self.expect(";")
            return PredDecl(name.text, params, contract, body, span=name.span)
        if self._accept("theorem"):
            name = self.expect_identifier()
            params = self.params() if self._at("(") else ()
            contract = self.contract()
            self.expect("⇔")
            body = self.expr()
            self.expect(";")
            return TheoremDecl(name.text, params, contract, body, span=name.span)
        if self._accept("fun"):
            name = self.expect_identifier()
            params = self.params()
            self.expect(":")
            result = self.type_expr()
            contract = self.contract()
            self.expect("=")
            body = self.expr()
            self.expect(";")
            return FunDecl(name.text, params, result, contract, body, span=name.span)
        if self._accept("proc"):
            name = self.expect_identifier()
            params = self.params()
            self.expect(":")
            result = self.type_expr()
            contract = self.contract()
            self.expect("{")
            cmds: list[Cmd] = []
            while not self._at("return"):
                cmds.append(self.command())
            self.expect("return")
            ret = self.expr()
            self.expect(";")
            self.expect("}")
            return ProcDecl(name.text, params, result, contract, tuple(cmds), ret, span=name.span)
        raise self._fail("val", "type", "pred", "fun", "theorem", "proc")

    def params(self) -> tuple[Param, ...]:
        self.expect("(")
        params: list[Param] = []
        if not self._at(")"):
            while True:
                name = self.expect_identifier()
                self.expect(":")
                params.append(Param(name.text, self.type_expr(), span=name.span))
                if not self._accept(","):
                    break
        self.expect(")")
        return tuple(params)

    def contract(self) -> Contract:
        requires: list[Expr] = []
        ensures: list[Expr] = []
        decreases: Optional[Expr] = None
        while True:
            if self._accept("requires"):
                requires.append(self._clause())
            elif self._accept("ensures"):
                ensures.append(self._clause())
            elif self._at("decreases") and decreases is None:
                self._advance()
                decreases = self._clause()
            else:
                return Contract(tuple(requires), tuple(ensures), decreases)
            self.expect(";")

    # --- types -------------------------------------------------------------

    def type_expr(self, allow_unbounded: bool = False) -> TypeExpr:
        tok = self._tok
        span = tok.span
        if self._accept("Bool"):
            return BoolTypeExpr(span=span)
        if self._accept("ℕ"):
            if self._accept("["):
                bound = self._nested(self.expr)
                self.expect("]")
                return NatTypeExpr(bound, span=span)
            if allow_unbounded:
                return NatTypeExpr(None, span=span)
            raise self._fail("[")
        if self._accept("ℤ"):
            self.expect("[")
            lo = self._nested(self.expr)
            self.expect(",")
            hi = self._nested(self.expr)
            self.expect("]")
            return IntTypeExpr(lo, hi, span=span)
        if self._accept("Set"):
            self.expect("[")
            elem = self.type_expr()
            self.expect("]")
            return SetTypeExpr(elem, span=span)
        if self._accept("Tuple"):
            self.expect("[")
            elems = [self.type_expr()]
            while self._accept(","):
                elems.append(self.type_expr())
            self.expect("]")
            return TupleTypeExpr(tuple(elems), span=span)
        if self._accept("Record"):
            self.expect("[")
            fields: list[tuple[str, TypeExpr]] = []
            while True:
                name = self.expect_identifier()
                self.expect(":")
                fields.append((name.text, self.type_expr()))
                if not self._accept(","):
                    break
            self.expect("]")
            return RecordTypeExpr(tuple(fields), span=span)
        if self._accept("Array"):
            self.expect("[")
            length = self._nested(self.expr)
            self.expect(",")
            elem = self.type_expr()
            self.expect("]")
            return ArrayTypeExpr(length, elem, span=span)
        if self._accept("Map"):
            self.expect("[")
            dom = self.type_expr()
            self.expect(",")
            cod = self.type_expr()
            self.expect("]")
            return MapTypeExpr(dom, cod, span=span)
        if tok.kind is TokenKind.IDENTIFIER:
            self._advance()
            return NamedTypeExpr(tok.text, span=span)
        raise self._fail("Bool", "ℕ", "ℤ", "Set", "Tuple", "Record", "Array", "Map", "identifier")

    # --- commands ----------------------------------------------------------

    def command(self) -> Cmd:
        tok = self._tok
        span = tok.span
        if self._accept("var"):
            decl = self._var_decl(span)
            self.expect(";")
            return decl
        if self._accept("{"):
            cmds: list[Cmd] = []
            while not self._accept("}"):
                cmds.append(self.command())
            return Block(tuple(cmds), span=span)
        if self._accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.command()
            else_ = self.command() if self._accept("else") else None
            return If(cond, then, else_, span=span)
        if self._accept("while"):
            cond = self.expr()
            self.expect("do")
            loop = self.loop_spec()
            return While(cond, loop, self.command(), span=span)
        if self._accept("for"):
            if self._accept("var"):
                init = self._var_decl(span)
                self.expect(";")
                cond = self.expr()
                self.expect(";")
                update = self._assignment()
                self.expect("do")
                loop = self.loop_spec()
                return For(init, cond, update, loop, self.command(), span=span)
            name = self.expect_identifier()
            self.expect("∈")
            domain = self.expr()
            cond_in = self.expr() if self._accept("with") else None
            self.expect("do")
            loop = self.loop_spec()
            return ForIn(name.text, domain, cond_in, loop, self.command(), span=span)
        if self._accept("choose"):
            binders = self.binders()
            cond_choose = self.expr() if self._accept("with") else None
            if self._accept("then"):
                then = self.command()
                self.expect("else")
                return ChooseElse(binders, cond_choose, then, self.command(), span=span)
            if self._accept("do"):
                loop = self.loop_spec()
                return ChooseDo(binders, cond_choose, loop, self.command(), span=span)
            self.expect(";")
            return ChooseCmd(binders, cond_choose, span=span)
        if self._accept("assert"):
            formula = self.expr()
            self.expect(";")
            return Assert(formula, span=span)
        if self._accept("print"):
            printed = self.expr()
            self.expect(";")
            return PrintCmd(printed, span=span)
        if tok.kind is TokenKind.IDENTIFIER:
            assign = self._assignment()
            self.expect(";")
            return assign
        raise self._fail("var", "{", "if", "while", "for", "choose", "assert", "print", "identifier")

    def _var_decl(self, span: SourceSpan) -> VarDecl:
        name = self.expect_identifier()
        self.expect(":")
        type_ = self.type_expr()
        self.expect(":=")
        return VarDecl(name.text, type_, self.expr(), span=span)

    def _assignment(self) -> Assign:
        name = self.expect_identifier()
        indices: list[Expr] = []
        while self._accept("["):
            indices.append(self._nested(self.expr))
            self.expect("]")
        self.expect(":=")
        return Assign(name.text, tuple(indices), self.expr(), span=name.span)

    def loop_spec(self) -> LoopSpec:
        invariants: list[Expr] = []
        decreases: Optional[Expr] = None
        while True:
            if self._accept("invariant"):
                invariants.append(self._clause())
            elif self._at("decreases") and decreases is None:
                self._advance()
                decreases = self._clause()
            else:
                return LoopSpec(tuple(invariants), decreases)
            self.expect(";")

    # --- expressions -------------------------------------------------------

    def expr(self) -> Expr:
        left = self._implies()
        while self._at("⇔"):
            op = self._advance()
            left = Binary("⇔", left, self._implies(), span=op.span)
        return left

    def _implies(self) -> Expr:
        left = self._or()
        if self._at("⇒"):
            op = self._advance()
            return Binary("⇒", left, self._implies(), span=op.span)
        return left

    def _or(self) -> Expr:
        left = self._and()
        while self._at("∨"):
            op = self._advance()
            left = Binary("∨", left, self._and(), span=op.span)
        return left

    def _and(self) -> Expr:
        left = self._relation()
        while self._at("∧"):
            op = self._advance()
            left = Binary("∧", left, self._relation(), span=op.span)
        return left

    def _relation(self) -> Expr:
        left = self._range()
        if self._at(*RELATIONAL) and not (self._stop_at_in and self._at("∈")):
            op = self._advance()
            return Binary(op.text, left, self._range(), span=op.span)
        return left

    def _range(self) -> Expr:
        left = self._additive()
        if self._at(".."):
            op = self._advance()
            return Range(left, self._additive(), span=op.span)
        return left

    def _additive(self) -> Expr:
        left = self._multiplicative()
        while self._at(*ADDITIVE):
            op = self._advance()
            left = Binary(op.text, left, self._multiplicative(), span=op.span)
        return left

    def _multiplicative(self) -> Expr:
        left = self._power()
        while self._at(*MULTIPLICATIVE):
            op = self._advance()
            left = Binary(op.text, left, self._power(), span=op.span)
        return left

    def _power(self) -> Expr:
        base = self._unary()
        if self._at("^"):
            op = self._advance()
            return Binary("^", base, self._power(), span=op.span)
        return base

    def _unary(self) -> Expr:
        if self._at("¬", "-"):
            op = self._advance()
            return Unary(op.text, self._unary(), span=op.span)
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            if self._at(".") and self._tight_dot():
                dot = self._advance()
                target = self._advance()
                if target.kind is TokenKind.INTEGER:
                    expr = Select(expr, int(target.text), span=dot.span)
                else:
                    expr = FieldSelect(expr, target.text, span=dot.span)
            elif self._at("["):
                bracket = self._advance()
                index = self._nested(self.expr)
                self.expect("]")
                expr = Index(expr, index, span=bracket.span)
            else:
                return expr

    def _tight_dot(self) -> bool:
        """A projection dot touches both neighbours: ``x.1``, not ``∀x∈s. 1``."""
        prev = self._tokens[self._pos - 1]
        dot = self._tok
        nxt = self._peek()
        if nxt.kind not in (TokenKind.INTEGER, TokenKind.IDENTIFIER):
            return False
        return (
            prev.span.line == dot.span.line == nxt.span.line
            and prev.span.column + prev.span.length == dot.span.column
            and dot.span.column + 1 == nxt.span.column
        )

    def _primary(self) -> Expr:
        tok = self._tok
        span = tok.span
        if tok.kind is TokenKind.INTEGER:
            self._advance()
            return IntLit(int(tok.text), span=span)
        if tok.kind is TokenKind.IDENTIFIER:
            self._advance()
            if self._accept("("):
                args: list[Expr] = []
                if not self._at(")"):
                    args.append(self._nested(self.expr))
                    while self._accept(","):
                        args.append(self._nested(self.expr))
                self.expect(")")
                return Apply(tok.text, tuple(args), span=span)
            return Var(tok.text, span=span)
        if self._accept("⊤"):
            return BoolLit(True, span=span)
        if self._accept("⊥"):
            return BoolLit(False, span=span)
        if self._accept("("):
            inner = self._nested(self.expr)
            self.expect(")")
            return inner
        if self._accept("⟨"):
            return self._tuple_or_record(span)
        if self._accept("{"):
            return self._set_expression(span)
        if self._accept("∅"):
            self.expect("[")
            elem = self.type_expr()
            self.expect("]")
            return EmptySet(elem, span=span)
        if self._accept("|"):
            inner = self._nested(self.expr)
            self.expect("|")
            return Card(inner, span=span)
        if self._at("∀", "∃"):
            quantifier = self._advance().text
            binders = self.binders()
            cond = self.expr() if self._accept("with") else None
            self.expect(".")
            return Quantified(quantifier, binders, cond, self.expr(), span=span)
        if self._accept("∑"):
            binders = self.binders()
            cond = self.expr() if self._accept("with") else None
            self.expect(".")
            return Sum(binders, cond, self.expr(), span=span)
        if self._accept("choose"):
            binders = self.binders()
            cond = self.expr() if self._accept("with") else None
            return Choose(binders, cond, span=span)
        if self._accept("if"):
            cond = self._nested(self.expr)
            self.expect("then")
            then = self._nested(self.expr)
            self.expect("else")
            return IfExpr(cond, then, self.expr(), span=span)
        if self._accept("let"):
            name = self.expect_identifier()
            self.expect("=")
            saved = self._stop_at_in
            self._stop_at_in = True
            try:
                value = self.expr()
            finally:
                self._stop_at_in = saved
            self.expect("∈")
            return Let(name.text, value, self.expr(), span=span)
        if self._accept("print"):
            return Print(self.expr(), span=span)
        if self._accept("Array"):
            self.expect("[")
            length = self._nested(self.expr)
            self.expect(",")
            elem = self.type_expr()
            self.expect("]")
            self.expect("(")
            value = self._nested(self.expr)
            self.expect(")")
            return ArrayInit(length, elem, value, span=span)
        if self._accept("Map"):
            self.expect("[")
            dom = self.type_expr()
            self.expect(",")
            cod = self.type_expr()
            self.expect("]")
            self.expect("(")
            value = self._nested(self.expr)
            self.expect(")")
            return MapInit(dom, cod, value, span=span)
        raise self._fail(
            "integer", "identifier", "⊤", "⊥", "(", "⟨", "{", "∅", "|", "∀", "∃", "∑",
            "choose", "if", "let", "print", "Array", "Map", "¬", "-",
        )

    def _tuple_or_record(self, span: SourceSpan) -> Expr:
        if self._tok.kind is TokenKind.IDENTIFIER and self._peek().text == ":" \
                and self._peek().kind is TokenKind.PUNCTUATION:
            fields: list[tuple[str, Expr]] = []
            while True:
                name = self.expect_identifier()
                self.expect(":")
                fields.append((name.text, self._nested(self.expr)))
                if not self._accept(","):
                    break
            self.expect("⟩")
            return RecordExpr(tuple(fields), span=span)
        elems = [self._nested(self.expr)]
        while self._accept(","):
            elems.append(self._nested(self.expr))
        self.expect("⟩")
        return TupleExpr(tuple(elems), span=span)

    def _set_expression(self, span: SourceSpan) -> Expr:
        first = self._nested(self.expr)
        if self._accept("|"):
            binders = self.binders()
            cond = self._nested(self.expr) if self._accept("with") else None
            self.expect("}")
            return SetBuilder(first, binders, cond, span=span)
        elems = [first]
        while self._accept(","):
            elems.append(self._nested(self.expr))
        self.expect("}")
        return SetLit(tuple(elems), span=span)

    def binders(self) -> tuple[Binder, ...]:
        binders: list[Binder] = []
        while True:
            name = self.expect_identifier()
            if self._accept(":"):
                binders.append(Binder(name.text, type=self.type_expr(), span=name.span))
            elif self._accept("∈"):
                binders.append(Binder(name.text, domain=self._nested(self.expr), span=name.span))
            else:
                raise self._fail(":", "∈")
            if not self._accept(","):
                return tuple(binders)
