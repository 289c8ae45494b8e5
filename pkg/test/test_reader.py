import io

import pytest

from fspec.errors import LexError, ParseError
from fspec.models import FunDecl, ValDecl
from fspec.reader import load_spec, parse_source, read_source

SAMPLE = "val N: ℕ;\nfun twice(x:ℕ[N]): ℕ[2·N] = 2·x;\n"


def test_read_source_from_path_uses_file_name(tmp_path):
    spec_path = tmp_path / "sample.fspec"
    spec_path.write_text(SAMPLE, encoding="utf-8")

    text, filename = read_source(spec_path)

    assert text == SAMPLE
    assert filename == "sample.fspec"


def test_read_source_from_string_path(tmp_path):
    spec_path = tmp_path / "sample.fspec"
    spec_path.write_text(SAMPLE, encoding="utf-8")

    _, filename = read_source(str(spec_path))

    assert filename == "sample.fspec"


def test_read_source_from_text_stream():
    text, filename = read_source(io.StringIO(SAMPLE))
    assert text == SAMPLE
    assert filename == "<input>"


def test_load_spec_parses_declarations(tmp_path):
    spec_path = tmp_path / "sample.fspec"
    spec_path.write_text(SAMPLE, encoding="utf-8")

    spec = load_spec(spec_path)

    assert [type(d) for d in spec.declarations] == [ValDecl, FunDecl]
    assert spec.declarations[1].span.file == "sample.fspec"
    assert spec.declarations[1].span.line == 2


def test_parse_errors_carry_the_file_name():
    with pytest.raises(ParseError) as info:
        parse_source("fun f(x:ℕ[3]): ℕ[3] = ;", "broken.fspec")
    assert str(info.value).startswith("broken.fspec:1:23: ")


def test_missing_file_raises_os_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_source(tmp_path / "missing.fspec")


def test_undecodable_bytes_are_a_lexical_error(tmp_path):
    spec_path = tmp_path / "bad.fspec"
    spec_path.write_bytes(b"val N: \xff\xfe;")

    with pytest.raises(LexError) as info:
        read_source(spec_path)

    assert str(info.value) == "bad.fspec:1:8: invalid UTF-8 byte 0xff"


def test_undecodable_byte_position_counts_characters(tmp_path):
    spec_path = tmp_path / "bad.fspec"
    spec_path.write_bytes("val N: ℕ;\n  val ".encode("utf-8") + b"\x80")

    with pytest.raises(LexError) as info:
        load_spec(spec_path)

    assert (info.value.span.line, info.value.span.column) == (2, 7)
