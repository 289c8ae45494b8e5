from pathlib import Path
from typing import Optional

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from fspec.errors import LexError, ParseError
from fspec.evaluator import EvalMode, invoke_operation
from fspec.lexer import tokenize
from fspec.models import Binary, Expr, IntLit, Unary, Var
from fspec.parser import parse_expression
from fspec.printer import print_expr
from fspec.reader import parse_source
from fspec.semantics import resolve_constants, typecheck_spec
from fspec.semtypes import BOOL, ArrayType, IntType, MapType, RecordType, SemType, SetType, TupleType, cardinality
from fspec.typed import TypedSpec
from fspec.values import Order, compare_values, contains, enumerate_type, nth_value, sorted_values

MAX_CARDINALITY = 2000
FILTERED = [HealthCheck.filter_too_much, HealthCheck.too_slow]


@st.composite
def int_types(draw) -> IntType:
    lo = draw(st.integers(-3, 3))
    return IntType(lo, lo + draw(st.integers(0, 3)))


def _compound(children: st.SearchStrategy[SemType]) -> st.SearchStrategy[SemType]:
    names = ("a", "b", "c")
    return st.one_of(
        children.map(SetType),
        st.lists(children, min_size=1, max_size=3).map(lambda ts: TupleType(tuple(ts))),
        st.lists(children, min_size=1, max_size=3).map(
            lambda ts: RecordType(tuple(zip(names, ts)))),
        st.builds(ArrayType, st.integers(1, 3), children),
        st.builds(MapType, children, children),
    )


sem_types = st.recursive(st.one_of(st.just(BOOL), int_types()), _compound, max_leaves=4)


def _small(sem_type: SemType) -> bool:
    try:
        return cardinality(sem_type) <= MAX_CARDINALITY
    except ValueError:
        return False


@settings(max_examples=50, deadline=None, suppress_health_check=FILTERED)
@given(sem_types)
def test_cardinality_is_enumeration_length(sem_type):
    assume(_small(sem_type))
    assert len(list(enumerate_type(sem_type))) == cardinality(sem_type)


@settings(max_examples=50, deadline=None, suppress_health_check=FILTERED)
@given(sem_types, st.data())
def test_nth_value_agrees_with_enumeration(sem_type, data):
    assume(_small(sem_type))
    values = list(enumerate_type(sem_type))
    index = data.draw(st.integers(0, len(values) - 1))
    assert nth_value(sem_type, index) == values[index]
    assert contains(sem_type, values[index])


@settings(max_examples=30, deadline=None, suppress_health_check=FILTERED)
@given(sem_types)
def test_enumeration_is_sorted_without_duplicates(sem_type):
    assume(_small(sem_type))
    values = list(enumerate_type(sem_type))
    for before, after in zip(values, values[1:]):
        assert compare_values(before, after) is Order.LESS


leaves = st.one_of(
    st.integers(0, 9).map(IntLit),
    st.sampled_from(["x", "y", "z"]).map(Var),
)
signed_leaves = st.one_of(leaves, leaves.map(lambda e: Unary("-", e)))
arithmetic = st.recursive(
    signed_leaves,
    lambda children: st.builds(Binary, st.sampled_from(["+", "-", "·", "/", "%"]), children, children),
    max_leaves=8,
)
formulas = st.recursive(
    st.builds(Binary, st.sampled_from(["=", "<", "≤", "≠"]), arithmetic, arithmetic),
    lambda children: st.one_of(
        st.builds(Binary, st.sampled_from(["∧", "∨", "⇒", "⇔"]), children, children),
        children.map(lambda e: Unary("¬", e)),
    ),
    max_leaves=4,
)


def reparse(expr: Expr) -> Expr:
    return parse_expression(tokenize(print_expr(expr)))


@settings(max_examples=200, deadline=None)
@given(st.one_of(arithmetic, formulas))
def test_printed_expressions_parse_back(expr):
    assert reparse(expr) == expr


def division_spec() -> TypedSpec:
    spec = parse_source(
        "fun q(a:ℤ[-20,20], b:ℤ[-20,20]): ℤ[-21,21] = a / b;\n"
        "fun r(a:ℤ[-20,20], b:ℤ[-20,20]): ℕ[19] = a % b;\n",
        "division.fspec",
    )
    return typecheck_spec(spec, resolve_constants(spec, {}))


DIVISION = division_spec()


@given(st.integers(-20, 20), st.integers(-20, 20).filter(bool))
def test_division_identity(a, b):
    quotient = invoke_operation(DIVISION.operation("q"), (a, b), EvalMode.DETERMINISTIC).first()
    remainder = invoke_operation(DIVISION.operation("r"), (a, b), EvalMode.DETERMINISTIC).first()
    assert quotient * b + remainder == a
    assert 0 <= remainder < abs(b)


@given(st.permutations(list(enumerate_type(SetType(IntType(0, 3))))))
def test_any_order_sorts_to_the_enumeration(values):
    assert sorted_values(values) == list(enumerate_type(SetType(IntType(0, 3))))


CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CORPUS_TEXTS = {
    name: (CORPUS / f"{name}.fspec").read_text(encoding="utf-8")
    for name in ("gcd", "max", "primes", "closure")
}


def error_line_after_deletion(text: str, position: int) -> Optional[int]:
    try:
        parse_source(text[:position] + text[position + 1:], "mutated.fspec")
    except (LexError, ParseError) as error:
        assert error.span is not None
        return error.span.line
    return None


def deletion_line(text: str, position: int) -> int:
    return text.count("\n", 0, position) + 1


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(sorted(CORPUS_TEXTS)), st.data())
def test_syntax_error_is_reported_near_a_deleted_character(name, data):
    text = CORPUS_TEXTS[name]
    position = data.draw(st.integers(0, len(text) - 1))
    line = error_line_after_deletion(text, position)
    if line is not None:
        assert line <= deletion_line(text, position) + 1


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(CORPUS_TEXTS))
def test_every_deleted_character_is_reported_nearby(name):
    text = CORPUS_TEXTS[name]
    for position in range(len(text)):
        line = error_line_after_deletion(text, position)
        if line is not None:
            assert line <= deletion_line(text, position) + 1, (position, text[position])
