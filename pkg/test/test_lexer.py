import pytest

from fspec.errors import LexError
from fspec.lexer import tokenize
from fspec.models import SourceSpan, TokenKind


def texts(source: str) -> list[str]:
    return [tok.text for tok in tokenize(source)]


def test_ascii_aliases_normalize_to_unicode():
    assert texts("forall x:Nat[3]. x <= 3 => true") == texts("∀x:ℕ[3]. x ≤ 3 ⇒ ⊤")
    assert texts("a /\\ b \\/ ~c") == ["a", "∧", "b", "∨", "¬", "c", ""]
    assert texts("s union t intersect u") == ["s", "∪", "t", "∩", "u", ""]


def test_longest_spelling_wins():
    assert texts("p <=> q") == ["p", "⇔", "q", ""]
    assert texts("x ~= y") == ["x", "≠", "y", ""]
    assert texts("x := 1..n") == ["x", ":=", "1", "..", "n", ""]


def test_stream_ends_with_end_token():
    tokens = tokenize("")
    assert len(tokens) == 1
    assert tokens[0].kind is TokenKind.END


def test_comments_are_dropped():
    source = "val N: ℕ; // the size\n/* a\nblock */ type nat = ℕ[N];"
    assert texts(source) == ["val", "N", ":", "ℕ", ";", "type", "nat", "=", "ℕ", "[", "N", "]", ";", ""]


def test_token_kinds():
    tokens = tokenize("fun f(x:ℕ[3]): Bool = x ≤ 3 ∧ ⊤;")
    kinds = {tok.text: tok.kind for tok in tokens}
    assert kinds["fun"] is TokenKind.KEYWORD
    assert kinds["f"] is TokenKind.IDENTIFIER
    assert kinds["3"] is TokenKind.INTEGER
    assert kinds["ℕ"] is TokenKind.KEYWORD
    assert kinds["⊤"] is TokenKind.KEYWORD
    assert kinds["≤"] is TokenKind.OPERATOR
    assert kinds["("] is TokenKind.PUNCTUATION


def test_ascii_tuple_brackets():
    assert texts("(|1,2|)") == ["⟨", "1", ",", "2", "⟩", ""]
    kinds = [tok.kind for tok in tokenize("(|1,2|)")]
    assert kinds[0] is TokenKind.PUNCTUATION


def test_bar_without_open_tuple_is_cardinality():
    assert texts("(|s|)") == ["⟨", "s", "⟩", ""]
    assert texts("f(|s|)") == ["f", "⟨", "s", "⟩", ""]
    assert texts("|s|") == ["|", "s", "|", ""]


def test_spans_track_lines_and_columns():
    tokens = tokenize("val N: ℕ;\n  type", filename="a.fspec")
    assert tokens[0].span == SourceSpan("a.fspec", 1, 1, 3)
    assert tokens[5].text == "type"
    assert tokens[5].span == SourceSpan("a.fspec", 2, 3, 4)


def test_symbol_letter_ends_identifier():
    assert texts("xℕ") == ["x", "ℕ", ""]


def test_illegal_character():
    with pytest.raises(LexError) as info:
        tokenize("val x = 1 @ 2;", filename="bad.fspec")
    assert info.value.span.line == 1
    assert info.value.span.column == 11
    assert str(info.value) == "bad.fspec:1:11: illegal character '@'"


def test_unterminated_comment():
    with pytest.raises(LexError, match="unterminated comment"):
        tokenize("val N: ℕ; /* never closed")
