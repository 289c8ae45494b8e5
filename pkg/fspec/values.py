from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import comb
from typing import Any, Callable, Generic, Iterable, Iterator, Optional, TypeVar, Union

from fspec.errors import CardinalityOverflow
from fspec.semtypes import (
    ArrayType,
    BoolType,
    IntType,
    MapType,
    RecordType,
    SemType,
    SetType,
    TupleType,
    cardinality,
)

T = TypeVar("T")

# Domains up to this size are materialized once and shared.
DOMAIN_CACHE_LIMIT = 1 << 16


@dataclass(frozen=True)
class RecordV:
    names: tuple[str, ...]
    vals: tuple[Value, ...]

    def get(self, name: str) -> Value:
        return self.vals[self.names.index(name)]

    def replace(self, name: str, value: Value) -> "RecordV":
        index = self.names.index(name)
        return RecordV(self.names, self.vals[:index] + (value,) + self.vals[index + 1:])


@dataclass(frozen=True)
class MapV:
    """Total map; ``keys`` is the canonical enumeration of the domain."""

    keys: tuple[Value, ...]
    vals: tuple[Value, ...]
    _positions: dict[Any, int] = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        if not self._positions:
            self._positions.update((key, i) for i, key in enumerate(self.keys))

    def get(self, key: Value) -> Value:
        return self.vals[self._positions[key]]

    def replace(self, key: Value, value: Value) -> "MapV":
        index = self._positions[key]
        return MapV(self.keys, self.vals[:index] + (value,) + self.vals[index + 1:], self._positions)


# Booleans and integers are Python natives, tuples and arrays are tuples and
# sets are frozensets.
Value = Union[bool, int, tuple["Value", ...], frozenset["Value"], RecordV, MapV]


class Order(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class LazySeq(Generic[T]):
    """A re-iterable, demand-driven sequence.

    Every iteration calls the producer afresh, so consuming the sequence
    twice yields the same elements.
    """

    def __init__(self, producer: Callable[[], Iterator[T]]) -> None:
        self._producer = producer

    @classmethod
    def of(cls, items: Iterable[T]) -> "LazySeq[T]":
        materialized = tuple(items)
        return cls(lambda: iter(materialized))

    def __iter__(self) -> Iterator[T]:
        return self._producer()

    def uncons(self) -> Optional[tuple[T, "LazySeq[T]"]]:
        """Split into head and tail, or None at the end of the sequence."""
        for head in self:
            return head, LazySeq(lambda: itertools.islice(self._producer(), 1, None))
        return None

    def first(self) -> T:
        for item in self:
            return item
        raise IndexError("empty sequence")


# --- ordering ----------------------------------------------------------------


def sort_key(value: Value) -> Any:
    """Key whose natural order is the canonical value order."""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, tuple):
        return tuple(sort_key(v) for v in value)
    if isinstance(value, frozenset):
        return (len(value), tuple(sorted(sort_key(v) for v in value)))
    if isinstance(value, (RecordV, MapV)):
        return tuple(sort_key(v) for v in value.vals)
    raise TypeError(f"not a value: {value!r}")


def compare_values(a: Value, b: Value) -> Order:
    if a == b:
        return Order.EQUAL
    return Order.LESS if sort_key(a) < sort_key(b) else Order.GREATER


def sorted_values(values: Iterable[Value]) -> list[Value]:
    return sorted(values, key=sort_key)


# --- formatting --------------------------------------------------------------


def format_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, tuple):
        return "[" + ",".join(format_value(v) for v in value) + "]"
    if isinstance(value, frozenset):
        return "{" + ",".join(format_value(v) for v in sorted_values(value)) + "}"
    if isinstance(value, RecordV):
        return "[" + ",".join(f"{n}:{format_value(v)}" for n, v in zip(value.names, value.vals)) + "]"
    if isinstance(value, MapV):
        return "[" + ",".join(f"{format_value(k)}:{format_value(v)}" for k, v in zip(value.keys, value.vals)) + "]"
    raise TypeError(f"not a value: {value!r}")


def format_args(values: Iterable[Value]) -> str:
    return ",".join(format_value(v) for v in values)


# --- type membership ---------------------------------------------------------


def contains(sem_type: SemType, value: Value) -> bool:
    """True if ``value`` is one of the values of ``sem_type``."""
    match sem_type:
        case BoolType():
            return isinstance(value, bool)
        case IntType(lo=lo, hi=hi):
            return isinstance(value, int) and not isinstance(value, bool) and lo <= value <= hi
        case SetType(elem=elem):
            return isinstance(value, frozenset) and all(contains(elem, v) for v in value)
        case TupleType(elems=elems):
            return isinstance(value, tuple) and len(value) == len(elems) and all(
                contains(t, v) for t, v in zip(elems, value)
            )
        case RecordType(fields=fields):
            return isinstance(value, RecordV) and all(
                contains(t, v) for (_, t), v in zip(fields, value.vals)
            )
        case ArrayType(length=length, elem=elem):
            return isinstance(value, tuple) and len(value) == length and all(
                contains(elem, v) for v in value
            )
        case MapType(cod=cod):
            return isinstance(value, MapV) and all(contains(cod, v) for v in value.vals)
    return False


# --- enumeration -------------------------------------------------------------


def enumerate_type(sem_type: SemType) -> LazySeq[Value]:
    """All values of ``sem_type`` in canonical (strictly increasing) order."""
    if _cacheable(sem_type):
        domain = _cached_domain(sem_type)
        return LazySeq(lambda: iter(domain))
    return LazySeq(lambda: _generate(sem_type))


def domain_values(sem_type: SemType) -> Iterable[Value]:
    if _cacheable(sem_type):
        return _cached_domain(sem_type)
    return _generate(sem_type)


def _cacheable(sem_type: SemType) -> bool:
    try:
        return cardinality(sem_type) <= DOMAIN_CACHE_LIMIT
    except CardinalityOverflow:
        return False


@lru_cache(maxsize=256)
def _cached_domain(sem_type: SemType) -> tuple[Value, ...]:
    return tuple(_generate(sem_type))


def _generate(sem_type: SemType) -> Iterator[Value]:
    match sem_type:
        case BoolType():
            yield from (False, True)
        case IntType(lo=lo, hi=hi):
            yield from range(lo, hi + 1)
        case SetType(elem=elem):
            elems = tuple(domain_values(elem))
            for size in range(len(elems) + 1):
                for combo in itertools.combinations(elems, size):
                    yield frozenset(combo)
        case TupleType(elems=elems):
            yield from itertools.product(*(tuple(domain_values(e)) for e in elems))
        case RecordType(fields=fields):
            names = tuple(name for name, _ in fields)
            for vals in itertools.product(*(tuple(domain_values(t)) for _, t in fields)):
                yield RecordV(names, vals)
        case ArrayType(length=length, elem=elem):
            yield from itertools.product(tuple(domain_values(elem)), repeat=length)
        case MapType(dom=dom, cod=cod):
            keys = tuple(domain_values(dom))
            positions = {key: i for i, key in enumerate(keys)}
            for vals in itertools.product(tuple(domain_values(cod)), repeat=len(keys)):
                yield MapV(keys, vals, positions)
        case _:
            raise TypeError(f"not a semantic type: {sem_type!r}")


def nth_value(sem_type: SemType, index: int) -> Value:
    """The value at position ``index`` of ``enumerate_type(sem_type)``."""
    match sem_type:
        case BoolType():
            return (False, True)[index]
        case IntType(lo=lo):
            return lo + index
        case SetType(elem=elem):
            return _nth_subset(elem, index)
        case TupleType(elems=elems):
            return tuple(_mixed_radix(list(elems), index))
        case RecordType(fields=fields):
            vals = _mixed_radix([t for _, t in fields], index)
            return RecordV(tuple(name for name, _ in fields), tuple(vals))
        case ArrayType(length=length, elem=elem):
            return tuple(_mixed_radix([elem] * length, index))
        case MapType(dom=dom, cod=cod):
            keys = tuple(domain_values(dom))
            return MapV(keys, tuple(_mixed_radix([cod] * len(keys), index)))
    raise TypeError(f"not a semantic type: {sem_type!r}")


def _mixed_radix(types: list[SemType], index: int) -> list[Value]:
    # The last component varies fastest.
    digits: list[Value] = []
    for sem_type in reversed(types):
        index, digit = divmod(index, cardinality(sem_type))
        digits.append(nth_value(sem_type, digit))
    digits.reverse()
    return digits


def _nth_subset(elem: SemType, index: int) -> frozenset[Value]:
    n = cardinality(elem)
    size = 0
    while index >= comb(n, size):
        index -= comb(n, size)
        size += 1
    chosen: list[Value] = []
    candidate = 0
    for remaining in range(size, 0, -1):
        while True:
            block = comb(n - candidate - 1, remaining - 1)
            if index < block:
                break
            index -= block
            candidate += 1
        chosen.append(nth_value(elem, candidate))
        candidate += 1
    return frozenset(chosen)
