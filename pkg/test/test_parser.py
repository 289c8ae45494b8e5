from pathlib import Path

import pytest

from fspec.errors import ParseError
from fspec.lexer import tokenize
from fspec.models import (
    Apply,
    Assign,
    Binary,
    Binder,
    BoolLit,
    Card,
    Choose,
    ChooseDo,
    FieldSelect,
    FunDecl,
    If,
    Index,
    IntLit,
    Let,
    NatTypeExpr,
    NamedTypeExpr,
    PredDecl,
    ProcDecl,
    Quantified,
    Range,
    Select,
    SetBuilder,
    Symbol,
    TheoremDecl,
    TupleExpr,
    TypeDecl,
    Unary,
    ValDecl,
    Var,
    While,
)
from fspec.parser import parse_expression, parse_spec

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def expr(source: str):
    return parse_expression(tokenize(source))


def spec(source: str):
    return parse_spec(tokenize(source, filename="test.fspec"))


def test_multiplication_binds_tighter_than_addition():
    assert expr("1 + 2 · 3") == Binary("+", IntLit(1), Binary("·", IntLit(2), IntLit(3)))
    assert expr("(1 + 2) · 3") == Binary("·", Binary("+", IntLit(1), IntLit(2)), IntLit(3))


def test_subtraction_is_left_associative():
    assert expr("a - b - c") == Binary("-", Binary("-", Var("a"), Var("b")), Var("c"))


def test_implication_and_power_are_right_associative():
    assert expr("a ⇒ b ⇒ c") == Binary("⇒", Var("a"), Binary("⇒", Var("b"), Var("c")))
    assert expr("2^3^2") == Binary("^", IntLit(2), Binary("^", IntLit(3), IntLit(2)))


def test_connective_precedence():
    parsed = expr("a ∨ b ∧ c ⇔ d")
    assert parsed == Binary("⇔", Binary("∨", Var("a"), Binary("∧", Var("b"), Var("c"))), Var("d"))


def test_negation_applies_to_postfix_operand():
    assert expr("¬P[k]") == Unary("¬", Index(Var("P"), Var("k")))


def test_relations_do_not_chain():
    with pytest.raises(ParseError):
        expr("a < b < c")


def test_range_and_cardinality():
    assert expr("2..n") == Range(IntLit(2), Var("n"))
    assert expr("|C| + 1") == Binary("+", Card(Var("C")), IntLit(1))


def test_tight_dot_is_projection():
    assert expr("x.1") == Select(Var("x"), 1)
    assert expr("r.name") == FieldSelect(Var("r"), "name")
    assert expr("⟨x.1,y.2⟩") == TupleExpr((Select(Var("x"), 1), Select(Var("y"), 2)))


def test_quantifier_dot_is_not_projection():
    parsed = expr("∀x∈s. 1 ≤ x")
    assert parsed == Quantified("∀", (Binder("x", domain=Var("s")),), None,
                                Binary("≤", IntLit(1), Var("x")))


def test_quantifier_with_typed_binders_and_filter():
    parsed = expr("∃p:ℕ[N] with p > 0. m·p = n")
    assert isinstance(parsed, Quantified)
    assert parsed.binders == (Binder("p", type=NatTypeExpr(Var("N"))),)
    assert parsed.cond == Binary(">", Var("p"), IntLit(0))
    assert parsed.body == Binary("=", Binary("·", Var("m"), Var("p")), Var("n"))


def test_set_builder():
    parsed = expr("{ c | c∈C with ¬divides(p, c) }")
    assert parsed == SetBuilder(
        Var("c"),
        (Binder("c", domain=Var("C")),),
        Unary("¬", Apply("divides", (Var("p"), Var("c")))),
    )


def test_let_definition_ends_at_in():
    parsed = expr("let s = r ∪ t in s ⊆ u")
    assert parsed == Let("s", Binary("∪", Var("r"), Var("t")), Binary("⊆", Var("s"), Var("u")))


def test_membership_inside_let_body():
    parsed = expr("let x = 1 in x ∈ s")
    assert parsed == Let("x", IntLit(1), Binary("∈", Var("x"), Var("s")))


def test_choose_expression():
    parsed = expr("choose m:elem with Post(a, n, m)")
    assert parsed == Choose(
        (Binder("m", type=NamedTypeExpr("elem")),),
        Apply("Post", (Var("a"), Var("n"), Var("m"))),
    )


def test_declarations_of_every_kind():
    parsed = spec(
        """
        val N: ℕ; val K = 2;
        type nat = ℕ[N];
        pred even(n:nat) ⇔ n % 2 = 0;
        fun double(n:nat): ℕ[2·N] ensures result = n + n; = 2·n;
        theorem small ⇔ K < 3;
        theorem doubled(n:nat) ⇔ even(double(n));
        proc id(n:nat): nat { var m:nat := n; return m; }
        """
    )
    kinds = [type(decl) for decl in parsed.declarations]
    assert kinds == [ValDecl, ValDecl, TypeDecl, PredDecl, FunDecl, TheoremDecl, TheoremDecl, ProcDecl]
    assert parsed.declarations[0] == ValDecl("N", NatTypeExpr(None), None)
    assert parsed.declarations[1] == ValDecl("K", None, IntLit(2))
    small = parsed.find("small")
    assert isinstance(small, TheoremDecl)
    assert small.params == ()
    double = parsed.find("double")
    assert isinstance(double, FunDecl)
    assert double.contract.ensures == (Binary("=", Var("result"), Binary("+", Var("n"), Var("n"))),)


def test_procedure_commands():
    parsed = spec(
        """
        proc p(x:ℕ[9]): ℕ[9] {
          var a:ℕ[9] := x;
          while a > 0 do
            invariant a ≤ x;
            decreases a;
            a := a - 1;
          if a = 0 then a := 1; else a := 2;
          choose y∈{1,2} do a := y;
          return a;
        }
        """
    )
    proc = parsed.find("p")
    assert isinstance(proc, ProcDecl)
    loop = proc.body[1]
    assert isinstance(loop, While)
    assert loop.loop.invariants == (Binary("≤", Var("a"), Var("x")),)
    assert loop.loop.decreases == Var("a")
    assert loop.body == Assign("a", (), Binary("-", Var("a"), IntLit(1)))
    assert isinstance(proc.body[2], If)
    assert isinstance(proc.body[3], ChooseDo)
    assert proc.ret == Var("a")


def test_indexed_assignment():
    parsed = spec("proc p(): Array[3,Bool] { var P:Array[3,Bool] := Array[3,Bool](⊤); P[0] := ⊥; return P; }")
    proc = parsed.find("p")
    assert isinstance(proc, ProcDecl)
    assert proc.body[1] == Assign("P", (IntLit(0),), BoolLit(False))


def test_missing_semicolon_names_expected_token():
    with pytest.raises(ParseError) as info:
        spec("val N: ℕ\ntype nat = ℕ[N];")
    error = info.value
    assert ";" in error.expected
    assert error.found == "'type'"
    assert error.span.line == 1
    assert str(error).startswith("test.fspec:1:9: unexpected 'type'")


def test_unexpected_end_of_file():
    with pytest.raises(ParseError) as info:
        spec("pred p(x:Bool) ⇔")
    assert info.value.found == "end of file"


def test_unbounded_nat_only_in_constants():
    with pytest.raises(ParseError) as info:
        spec("fun f(x:ℕ): Bool = ⊤;")
    assert info.value.expected == ("[",)


def test_missing_terminator_is_reported_after_the_phrase():
    with pytest.raises(ParseError) as info:
        spec("pred p(x:Bool) ⇔ x\n\n// next\n\npred q(x:Bool) ⇔ x;")
    error = info.value
    assert error.found == "'pred'"
    assert (error.span.line, error.span.column) == (1, 19)


def test_unexpected_token_at_line_start_keeps_its_position():
    with pytest.raises(ParseError) as info:
        spec("val N: ℕ;\n\nfoo;")
    assert str(info.value).startswith("test.fspec:3:1: unexpected 'foo'")


def test_annotation_does_not_continue_at_the_first_column():
    parsed = spec("fun f(x:ℕ[3]): ℕ[3]\n  requires x > 0 ∧\n    x < 3;\n= x;")
    fun = parsed.find("f")
    assert isinstance(fun, FunDecl)
    assert len(fun.contract.requires) == 1

    with pytest.raises(ParseError) as info:
        spec("fun f(x:ℕ[3]): ℕ[3]\n  requires x > 0\n= x;\nfun g(x:ℕ[3]): ℕ[3] = x;")
    error = info.value
    assert error.expected == (";",)
    assert error.found == "'='"
    assert (error.span.line, error.span.column) == (2, 17)


LOOP = (
    "proc p(x:ℕ[3]): ℕ[3]\n"
    "{\n"
    "  var a:ℕ[3] := x;\n"
    "  while a > 0 do\n"
    "    decreases a;\n"
    "  {\n"
    "    a := a - 1;\n"
    "  }\n"
    "  return a;\n"
    "}\n"
)


def test_block_closed_at_another_indentation():
    assert isinstance(spec(LOOP).find("p"), ProcDecl)
    with pytest.raises(ParseError) as info:
        spec(LOOP.replace("  {\n", "", 1))
    assert str(info.value) == "test.fspec:2:1: block is closed by '}' at line 7 with a different indentation"


def test_deeply_nested_phrase_is_a_parse_error():
    depth = 3000
    with pytest.raises(ParseError, match="nested too deeply"):
        spec("theorem t ⇔ " + "(" * depth + "⊤" + ")" * depth + ";")


def ascii_spelling(text: str) -> str:
    for symbol in Symbol:
        if not symbol.text.isascii():
            text = text.replace(symbol.text, f" {min(symbol.alias_set)} ")
    return text


@pytest.mark.parametrize("name", ["gcd", "max", "primes", "closure"])
def test_corpus_in_ascii_aliases_parses_the_same(name):
    text = (CORPUS / f"{name}.fspec").read_text(encoding="utf-8")
    rewritten = ascii_spelling(text)
    assert not any(symbol.text in rewritten for symbol in Symbol if not symbol.text.isascii())
    assert spec(rewritten) == spec(text)
