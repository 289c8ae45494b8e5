import pytest

from fspec.semtypes import BOOL, ArrayType, IntType, MapType, RecordType, SetType, TupleType, cardinality
from fspec.values import (
    LazySeq,
    MapV,
    Order,
    RecordV,
    compare_values,
    contains,
    enumerate_type,
    format_args,
    format_value,
    nth_value,
    sorted_values,
)


def test_integers_and_booleans_enumerate_in_order():
    assert list(enumerate_type(BOOL)) == [False, True]
    assert list(enumerate_type(IntType(-2, 2))) == [-2, -1, 0, 1, 2]


def test_tuples_vary_last_component_fastest():
    values = list(enumerate_type(TupleType((IntType(0, 1), BOOL))))
    assert values == [(0, False), (0, True), (1, False), (1, True)]


def test_sets_are_ordered_by_size_first():
    values = list(enumerate_type(SetType(IntType(0, 2))))
    assert values == [
        frozenset(),
        frozenset({0}), frozenset({1}), frozenset({2}),
        frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2}),
        frozenset({0, 1, 2}),
    ]


def test_arrays_and_maps():
    arrays = list(enumerate_type(ArrayType(2, IntType(0, 1))))
    assert arrays == [(0, 0), (0, 1), (1, 0), (1, 1)]
    maps = list(enumerate_type(MapType(BOOL, IntType(0, 1))))
    assert [m.vals for m in maps] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert maps[1].get(True) == 1
    assert maps[1].get(False) == 0


def test_records():
    records = list(enumerate_type(RecordType((("a", BOOL), ("b", IntType(0, 1))))))
    assert len(records) == 4
    assert records[1] == RecordV(("a", "b"), (False, 1))
    assert records[1].get("b") == 1
    assert records[1].replace("a", True) == RecordV(("a", "b"), (True, 1))


@pytest.mark.parametrize(
    "sem_type",
    [
        SetType(IntType(0, 3)),
        TupleType((IntType(-1, 1), BOOL, IntType(0, 2))),
        ArrayType(3, IntType(-2, 2)),
        SetType(TupleType((IntType(0, 1), IntType(0, 1)))),
        RecordType((("x", IntType(0, 2)), ("y", BOOL))),
        MapType(IntType(0, 2), BOOL),
    ],
)
def test_nth_value_matches_enumeration(sem_type):
    values = list(enumerate_type(sem_type))
    assert len(values) == cardinality(sem_type)
    assert [nth_value(sem_type, i) for i in range(len(values))] == values
    assert sorted_values(reversed(values)) == values


def test_enumeration_is_strictly_increasing():
    values = list(enumerate_type(SetType(IntType(0, 3))))
    for before, after in zip(values, values[1:]):
        assert compare_values(before, after) is Order.LESS
        assert compare_values(after, before) is Order.GREATER
    assert compare_values(values[3], values[3]) is Order.EQUAL


def test_contains_checks_ranges():
    assert contains(IntType(0, 3), 3)
    assert not contains(IntType(0, 3), 4)
    assert not contains(IntType(0, 1), True)
    assert not contains(BOOL, 1)
    assert contains(SetType(IntType(0, 3)), frozenset({1, 3}))
    assert not contains(SetType(IntType(0, 3)), frozenset({5}))
    assert contains(ArrayType(2, BOOL), (True, False))
    assert not contains(ArrayType(2, BOOL), (True,))


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(-3) == "-3"
    assert format_value((1, 2, 3)) == "[1,2,3]"
    assert format_value(frozenset({(1, 0), (0, 1)})) == "{[0,1],[1,0]}"
    assert format_value(RecordV(("a", "b"), (1, False))) == "[a:1,b:false]"
    assert format_value(MapV((0, 1), (True, False))) == "[0:true,1:false]"
    assert format_args((20, 20)) == "20,20"


def test_lazy_sequence_can_be_consumed_twice():
    produced = []

    def producer():
        produced.append(1)
        return iter([1, 2, 3])

    seq = LazySeq(producer)
    assert list(seq) == [1, 2, 3]
    assert list(seq) == [1, 2, 3]
    assert len(produced) == 2


def test_lazy_sequence_head_and_tail():
    head, tail = LazySeq.of([1, 2, 3]).uncons()
    assert head == 1
    assert list(tail) == [2, 3]
    assert LazySeq.of([]).uncons() is None
    with pytest.raises(IndexError):
        LazySeq.of([]).first()
