from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from fspec.errors import CardinalityOverflow

# Largest domain size the checker is willing to count (a signed 64-bit count).
COUNT_LIMIT = 2**63 - 1

# Integers wider than this many bits are reported as overflow.
MAX_INT_BITS = 1 << 16


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class IntType:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty integer range {self.lo}..{self.hi}")


@dataclass(frozen=True)
class SetType:
    elem: SemType


@dataclass(frozen=True)
class TupleType:
    elems: tuple[SemType, ...]


@dataclass(frozen=True)
class RecordType:
    fields: tuple[tuple[str, SemType], ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    def field_index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class ArrayType:
    length: int
    elem: SemType


@dataclass(frozen=True)
class MapType:
    """A total map; every domain value has an image."""

    dom: SemType
    cod: SemType


SemType = Union[BoolType, IntType, SetType, TupleType, RecordType, ArrayType, MapType]

BOOL = BoolType()


def _checked(count: int) -> int:
    if count > COUNT_LIMIT:
        raise CardinalityOverflow(f"type has more than {COUNT_LIMIT} values")
    return count


def _power(base: int, exponent: int) -> int:
    if base <= 1 or exponent == 0:
        return 1 if exponent == 0 else base
    if exponent >= 64:
        raise CardinalityOverflow(f"type has more than {COUNT_LIMIT} values")
    return _checked(base**exponent)


def cardinality(sem_type: SemType) -> int:
    """Number of values of ``sem_type``.

    Raises:
        CardinalityOverflow: If the count exceeds COUNT_LIMIT.
    """
    match sem_type:
        case BoolType():
            return 2
        case IntType(lo=lo, hi=hi):
            return _checked(hi - lo + 1)
        case SetType(elem=elem):
            return _power(2, cardinality(elem))
        case TupleType(elems=elems):
            count = 1
            for elem in elems:
                count = _checked(count * cardinality(elem))
            return count
        case RecordType(fields=fields):
            count = 1
            for _, elem in fields:
                count = _checked(count * cardinality(elem))
            return count
        case ArrayType(length=length, elem=elem):
            return _power(cardinality(elem), length)
        case MapType(dom=dom, cod=cod):
            return _power(cardinality(cod), cardinality(dom))
    raise TypeError(f"not a semantic type: {sem_type!r}")


def compatible(a: SemType, b: SemType) -> bool:
    """Same shape, ignoring integer ranges (those are checked at runtime)."""
    match a, b:
        case BoolType(), BoolType():
            return True
        case IntType(), IntType():
            return True
        case SetType(), SetType():
            return compatible(a.elem, b.elem)
        case TupleType(), TupleType():
            return len(a.elems) == len(b.elems) and all(
                compatible(x, y) for x, y in zip(a.elems, b.elems)
            )
        case RecordType(), RecordType():
            return a.names == b.names and all(
                compatible(x, y) for (_, x), (_, y) in zip(a.fields, b.fields)
            )
        case ArrayType(), ArrayType():
            return a.length == b.length and compatible(a.elem, b.elem)
        case MapType(), MapType():
            return compatible(a.dom, b.dom) and compatible(a.cod, b.cod)
    return False


def join(a: SemType, b: SemType) -> SemType:
    """Smallest type holding the values of two compatible types."""
    match a, b:
        case IntType(), IntType():
            return IntType(min(a.lo, b.lo), max(a.hi, b.hi))
        case SetType(), SetType():
            return SetType(join(a.elem, b.elem))
        case TupleType(), TupleType():
            return TupleType(tuple(join(x, y) for x, y in zip(a.elems, b.elems)))
        case RecordType(), RecordType():
            return RecordType(tuple((n, join(x, y)) for (n, x), (_, y) in zip(a.fields, b.fields)))
        case ArrayType(), ArrayType():
            return ArrayType(a.length, join(a.elem, b.elem))
        case MapType(), MapType():
            return MapType(join(a.dom, b.dom), join(a.cod, b.cod))
    return a


def fits(source: SemType, target: SemType) -> bool:
    """True if every value of ``source`` is a value of ``target``.

    Both types must be compatible; a False answer only means a runtime range
    check is needed.
    """
    match source, target:
        case IntType(), IntType():
            return target.lo <= source.lo and source.hi <= target.hi
        case SetType(), SetType():
            return fits(source.elem, target.elem)
        case TupleType(), TupleType():
            return all(fits(x, y) for x, y in zip(source.elems, target.elems))
        case RecordType(), RecordType():
            return all(fits(x, y) for (_, x), (_, y) in zip(source.fields, target.fields))
        case ArrayType(), ArrayType():
            return fits(source.elem, target.elem)
        case MapType(), MapType():
            # Domains are total, so an Int domain must match exactly.
            return source.dom == target.dom and fits(source.cod, target.cod)
    return True


def format_type(sem_type: SemType) -> str:
    match sem_type:
        case BoolType():
            return "Bool"
        case IntType(lo=0, hi=hi):
            return f"ℕ[{hi}]"
        case IntType(lo=lo, hi=hi):
            return f"ℤ[{lo},{hi}]"
        case SetType(elem=elem):
            return f"Set[{format_type(elem)}]"
        case TupleType(elems=elems):
            return f"Tuple[{','.join(format_type(e) for e in elems)}]"
        case RecordType(fields=fields):
            return f"Record[{','.join(f'{n}:{format_type(t)}' for n, t in fields)}]"
        case ArrayType(length=length, elem=elem):
            return f"Array[{length},{format_type(elem)}]"
        case MapType(dom=dom, cod=cod):
            return f"Map[{format_type(dom)},{format_type(cod)}]"
    raise TypeError(f"not a semantic type: {sem_type!r}")


def format_signature_type(sem_type: SemType) -> str:
    """Type text with integer ranges and array lengths erased: ``Array[ℤ]``."""
    match sem_type:
        case BoolType():
            return "Bool"
        case IntType():
            return "ℤ"
        case SetType(elem=elem):
            return f"Set[{format_signature_type(elem)}]"
        case TupleType(elems=elems):
            return f"Tuple[{','.join(format_signature_type(e) for e in elems)}]"
        case RecordType(fields=fields):
            return f"Record[{','.join(f'{n}:{format_signature_type(t)}' for n, t in fields)}]"
        case ArrayType(elem=elem):
            return f"Array[{format_signature_type(elem)}]"
        case MapType(dom=dom, cod=cod):
            return f"Map[{format_signature_type(dom)},{format_signature_type(cod)}]"
    raise TypeError(f"not a semantic type: {sem_type!r}")
