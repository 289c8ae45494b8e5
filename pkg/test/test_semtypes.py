import pytest

from fspec.errors import CardinalityOverflow
from fspec.semtypes import (
    BOOL,
    COUNT_LIMIT,
    ArrayType,
    IntType,
    MapType,
    RecordType,
    SetType,
    TupleType,
    cardinality,
    compatible,
    fits,
    format_signature_type,
    format_type,
    join,
)

NAT20 = IntType(0, 20)


def test_cardinality_of_each_type():
    assert cardinality(BOOL) == 2
    assert cardinality(NAT20) == 21
    assert cardinality(IntType(-2, 2)) == 5
    assert cardinality(SetType(IntType(0, 2))) == 8
    assert cardinality(TupleType((NAT20, NAT20))) == 441
    assert cardinality(RecordType((("a", BOOL), ("b", IntType(0, 2))))) == 6
    assert cardinality(ArrayType(3, IntType(-2, 2))) == 125
    assert cardinality(ArrayType(0, BOOL)) == 1
    assert cardinality(MapType(IntType(0, 1), IntType(0, 2))) == 9


def test_relation_over_three_elements():
    pair = TupleType((IntType(0, 2), IntType(0, 2)))
    assert cardinality(SetType(pair)) == 512


def test_cardinality_overflow():
    with pytest.raises(CardinalityOverflow):
        cardinality(SetType(IntType(0, 63)))
    with pytest.raises(CardinalityOverflow):
        cardinality(IntType(0, COUNT_LIMIT))
    with pytest.raises(CardinalityOverflow):
        cardinality(SetType(IntType(0, 62)))
    assert cardinality(SetType(IntType(0, 61))) == 2**62


def test_compatible_ignores_integer_ranges():
    assert compatible(IntType(0, 3), IntType(-5, 5))
    assert compatible(SetType(IntType(0, 1)), SetType(IntType(4, 9)))
    assert not compatible(BOOL, IntType(0, 1))
    assert not compatible(ArrayType(2, BOOL), ArrayType(3, BOOL))
    assert not compatible(RecordType((("a", BOOL),)), RecordType((("b", BOOL),)))


def test_join_widens_ranges():
    assert join(IntType(0, 3), IntType(-1, 2)) == IntType(-1, 3)
    assert join(SetType(IntType(1, 1)), SetType(IntType(3, 3))) == SetType(IntType(1, 3))


def test_fits():
    assert fits(IntType(1, 3), IntType(0, 3))
    assert not fits(IntType(0, 4), IntType(0, 3))
    assert fits(BOOL, BOOL)
    assert not fits(MapType(IntType(0, 1), BOOL), MapType(IntType(0, 2), BOOL))


def test_format_type():
    assert format_type(NAT20) == "ℕ[20]"
    assert format_type(IntType(-3, 3)) == "ℤ[-3,3]"
    assert format_type(ArrayType(3, IntType(-2, 2))) == "Array[3,ℤ[-2,2]]"
    assert format_type(SetType(TupleType((BOOL, NAT20)))) == "Set[Tuple[Bool,ℕ[20]]]"


def test_signature_types_erase_ranges():
    assert format_signature_type(NAT20) == "ℤ"
    assert format_signature_type(ArrayType(3, IntType(-2, 2))) == "Array[ℤ]"
    assert format_signature_type(SetType(TupleType((NAT20, NAT20)))) == "Set[Tuple[ℤ,ℤ]]"
