from pathlib import Path
from typing import TextIO, Union

from fspec.errors import LexError
from fspec.lexer import tokenize
from fspec.models import SourceSpan, Spec
from fspec.parser import parse_spec

SpecSource = Union[str, Path, TextIO]


def _display_name(path: Union[str, Path]) -> str:
    """Error reports name the file the way the user sees it in a listing."""
    return Path(path).name


def read_source(source: SpecSource) -> tuple[str, str]:
    """
    Read specification text.

    Args:
        source: Path to a specification file or an open text handle.

    Returns:
        The text and the file name used in error locations.

    Raises:
        LexError: If a file is not valid UTF-8.
    """
    if isinstance(source, (str, Path)):
        filename = _display_name(source)
        return _decode(Path(source).read_bytes(), filename), filename
    name = getattr(source, "name", None)
    filename = _display_name(name) if isinstance(name, str) else "<input>"
    return source.read(), filename


def _decode(raw: bytes, filename: str) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as error:
        before = raw[:error.start].decode("utf-8")
        line = before.count("\n") + 1
        column = len(before) - (before.rfind("\n") + 1) + 1
        span = SourceSpan(filename, line, column, 1)
        raise LexError(f"invalid UTF-8 byte 0x{raw[error.start]:02x}", span) from None


def parse_source(text: str, filename: str = "<input>") -> Spec:
    return parse_spec(tokenize(text, filename))


def load_spec(source: SpecSource) -> Spec:
    """Read and parse a specification from a path or a text stream."""
    text, filename = read_source(source)
    return parse_source(text, filename)
