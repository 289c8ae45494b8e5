from __future__ import annotations

from fspec.errors import LexError
from fspec.models import (
    KEYWORDS,
    PLAIN_OPERATORS,
    PLAIN_PUNCTUATION,
    SourceSpan,
    Symbol,
    Token,
    TokenKind,
)


def _is_word(spelling: str) -> bool:
    return spelling.isascii() and spelling.isidentifier()


_WORD_SYMBOLS: dict[str, Symbol] = {
    alias: symbol
    for symbol in Symbol
    for alias in symbol.alias_set
    if _is_word(alias)
}

_MARK_SYMBOLS: dict[str, Symbol] = {
    spelling: symbol
    for symbol in Symbol
    for spelling in (symbol.text, *symbol.alias_set)
    if not _is_word(spelling)
}

_DIGITS = frozenset("0123456789")

# Letter-like symbols such as ℕ must not be swallowed by identifiers.
_SYMBOL_LETTERS = frozenset(s for s in _MARK_SYMBOLS if len(s) == 1 and s.isalpha())

# Longest spelling first so that "<=>" wins over "<=" and "~=" over "~".
_MARKS: list[tuple[str, TokenKind, str]] = sorted(
    [(spelling, symbol.kind, symbol.text) for spelling, symbol in _MARK_SYMBOLS.items()]
    + [(op, TokenKind.OPERATOR, op) for op in PLAIN_OPERATORS]
    + [(p, TokenKind.PUNCTUATION, p) for p in PLAIN_PUNCTUATION],
    key=lambda entry: -len(entry[0]),
)


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Split specification text into tokens.

    ASCII aliases are normalized so that a token's ``text`` is always the
    canonical Unicode spelling. Comments (``// ...`` and ``/* ... */``) and
    whitespace are dropped. The list always ends with an END token.

    Raises:
        LexError: On an illegal character or an unterminated block comment.
    """
    tokens: list[Token] = []
    line, column = 1, 1
    pos = 0
    length = len(source)
    # "|)" closes an ASCII tuple only while one opened with "(|" is pending.
    ascii_tuples = 0

    def advance(count: int) -> None:
        nonlocal pos, line, column
        for ch in source[pos:pos + count]:
            if ch == "\n":
                line += 1
                column = 1
            else:
                column += 1
        pos += count

    while pos < length:
        ch = source[pos]
        if ch.isspace():
            advance(1)
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            advance((length if end < 0 else end) - pos)
            continue
        if source.startswith("/*", pos):
            end = source.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated comment", SourceSpan(filename, line, column, 2))
            advance(end + 2 - pos)
            continue

        start = SourceSpan(filename, line, column)
        if ch in _DIGITS:
            end = pos
            while end < length and source[end] in _DIGITS:
                end += 1
            text = source[pos:end]
            tokens.append(Token(TokenKind.INTEGER, text, _sized(start, end - pos)))
            advance(end - pos)
            continue

        mark = _match_mark(source, pos, ascii_tuples)
        if mark is not None:
            spelling, kind, text = mark
            if spelling == "(|":
                ascii_tuples += 1
            elif spelling == "|)":
                ascii_tuples -= 1
            tokens.append(Token(kind, text, _sized(start, len(spelling))))
            advance(len(spelling))
            continue

        if ch.isalpha() or ch == "_":
            end = pos
            while end < length and (source[end].isalnum() or source[end] == "_"):
                if source[end] in _SYMBOL_LETTERS:
                    break
                end += 1
            word = source[pos:end]
            span = _sized(start, end - pos)
            if word in _WORD_SYMBOLS:
                symbol = _WORD_SYMBOLS[word]
                tokens.append(Token(symbol.kind, symbol.text, span))
            elif word in KEYWORDS:
                tokens.append(Token(TokenKind.KEYWORD, word, span))
            else:
                tokens.append(Token(TokenKind.IDENTIFIER, word, span))
            advance(end - pos)
            continue

        raise LexError(f"illegal character {ch!r}", _sized(start, 1))

    tokens.append(Token(TokenKind.END, "", SourceSpan(filename, line, column, 0)))
    return tokens


def _sized(span: SourceSpan, length: int) -> SourceSpan:
    return SourceSpan(span.file, span.line, span.column, length)


def _match_mark(source: str, pos: int, ascii_tuples: int) -> tuple[str, TokenKind, str] | None:
    for spelling, kind, text in _MARKS:
        if not source.startswith(spelling, pos):
            continue
        if spelling == "|)" and ascii_tuples == 0:
            continue
        return spelling, kind, text
    return None
