from pathlib import Path

import pytest

from fspec.errors import ArityMismatch, MissingDecreases, SpecError, SpecTypeError, TheoremFailed, UnknownConstant
from fspec.reader import parse_source
from fspec.semantics import DEFAULT_CONSTANT, resolve_constants, typecheck_spec
from fspec.semtypes import BOOL, ArrayType, IntType, SetType, TupleType
from fspec.typed import OperationKind, TypedSpec

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def make_spec(text: str):
    return parse_source(text, "test.fspec")


def make_typed(text: str, **consts: int) -> TypedSpec:
    spec = make_spec(text)
    return typecheck_spec(spec, resolve_constants(spec, consts))


def load_corpus(name: str, **consts: int) -> TypedSpec:
    spec = parse_source((CORPUS / f"{name}.fspec").read_text(encoding="utf-8"), f"{name}.fspec")
    return typecheck_spec(spec, resolve_constants(spec, consts))


def test_unspecified_constants_take_overrides_or_default():
    spec = make_spec("val N: ℕ; val M: ℕ; val K: ℕ = N + M;")
    consts = resolve_constants(spec, {"N": 3})
    assert consts.unspecified == {"N": 3, "M": DEFAULT_CONSTANT}
    assert consts.values == {"N": 3, "M": 5, "K": 8}
    assert resolve_constants(spec, {}, default_value=1).values["K"] == 2


def test_override_of_unknown_constant():
    spec = make_spec("val N: ℕ; val K: ℕ = 2;")
    with pytest.raises(UnknownConstant) as info:
        resolve_constants(spec, {"K": 3})
    assert info.value.name == "K"


def test_negative_constant_is_rejected():
    spec = make_spec("val N: ℕ;")
    with pytest.raises(SpecError):
        resolve_constants(spec, {"N": -1})


def test_defined_constant_must_fit_its_type():
    with pytest.raises(SpecTypeError, match="not in type"):
        make_typed("val K: ℕ[3] = 4;")
    with pytest.raises(SpecTypeError, match="not a natural number"):
        make_typed("val K: ℕ = 0 - 1;")


def test_named_types_resolve_against_constants():
    typed = make_typed(
        "val N: ℕ; val M: ℕ; type index = ℤ[-N,N]; type elem = ℤ[-M,M]; type array = Array[N,elem];",
        N=3, M=2,
    )
    assert typed.types["index"] == IntType(-3, 3)
    assert typed.types["array"] == ArrayType(3, IntType(-2, 2))


def test_empty_type_is_rejected():
    with pytest.raises(SpecTypeError, match="empty type"):
        make_typed("type t = ℤ[3,1];")


def test_gcd_corpus_signatures():
    typed = load_corpus("gcd", N=20)
    gcd = typed.operation("gcd")
    assert gcd.signature == "gcd(ℤ,ℤ)"
    assert gcd.result == IntType(0, 20)
    assert gcd.kind is OperationKind.FUN
    assert gcd.nondet
    assert not typed.operation("divides").nondet
    assert typed.operation("gcdp").kind is OperationKind.PROC
    assert typed.operation("gcd0").result == BOOL


def test_corpus_signatures():
    assert load_corpus("max", N=3, M=2).operation("maxFun").signature == "maxFun(Array[ℤ],ℤ)"
    closure = load_corpus("closure", N=2)
    op = closure.operation("transitiveClosureI")
    assert op.signature == "transitiveClosureI(Set[Tuple[ℤ,ℤ]])"
    assert op.param_types == (SetType(TupleType((IntType(0, 2), IntType(0, 2)))),)
    assert closure.operation("transitiveClosureR").recursive


def test_unknown_operation_lookup():
    typed = make_typed("pred p(x:Bool) ⇔ x;")
    with pytest.raises(KeyError, match="no operation named q"):
        typed.operation("q")


def test_type_mismatch():
    with pytest.raises(SpecTypeError, match="expected Bool, found ℕ\\[3\\]"):
        make_typed("fun f(x:ℕ[3]): Bool = x;")
    with pytest.raises(SpecTypeError):
        make_typed("pred p(x:ℕ[3]) ⇔ x ∧ ⊤;")


def test_unknown_names():
    with pytest.raises(SpecTypeError, match="unknown name y"):
        make_typed("fun f(x:ℕ[3]): ℕ[3] = y;")
    with pytest.raises(SpecTypeError, match="unknown operation g"):
        make_typed("fun f(x:ℕ[3]): ℕ[3] = g(x);")
    with pytest.raises(SpecTypeError, match="unknown type t"):
        make_typed("fun f(x:t): ℕ[3] = 0;")


def test_wrong_number_of_arguments():
    with pytest.raises(ArityMismatch):
        make_typed("fun f(x:ℕ[3]): ℕ[3] = x; fun g(x:ℕ[3]): ℕ[3] = f(x, x);")


def test_redeclaration():
    with pytest.raises(SpecTypeError, match="already declared"):
        make_typed("pred p(x:Bool) ⇔ x; pred p(y:Bool) ⇔ y;")
    with pytest.raises(SpecTypeError, match="already declared"):
        make_typed("proc p(x:ℕ[3]): ℕ[3] { var x:ℕ[3] := 1; return x; }")
    with pytest.raises(SpecTypeError, match="duplicate parameter"):
        make_typed("pred p(x:Bool, x:Bool) ⇔ x;")


def test_parameters_are_not_assignable():
    with pytest.raises(SpecTypeError, match="cannot be assigned"):
        make_typed("proc p(x:ℕ[3]): ℕ[3] { x := 1; return x; }")


def test_choice_variables_are_assignable():
    typed = make_typed("proc p(): ℕ[3] { choose z:ℕ[3] with z ≥ 2; z := 0; return z; }")
    assert typed.operation("p").nondet


def test_recursion_needs_a_measure():
    with pytest.raises(MissingDecreases) as info:
        make_typed("fun r(n:ℕ[5]): ℕ[5] = if n = 0 then 0 else r(n-1);")
    assert info.value.name == "r"


def test_old_values_only_inside_loop_annotations():
    with pytest.raises(SpecTypeError, match="unknown name old_a"):
        make_typed("proc p(x:ℕ[3]): ℕ[3] ensures result = old_a; { var a:ℕ[3] := x; return a; }")


def test_parameterless_theorems_are_checked_while_resolving_constants():
    spec = make_spec("val N: ℕ; theorem small ⇔ N < 3;")
    assert resolve_constants(spec, {"N": 2}).values["N"] == 2
    with pytest.raises(TheoremFailed) as info:
        resolve_constants(spec, {"N": 4})
    assert info.value.name == "small"
    assert str(info.value) == "test.fspec:1:19: theorem small is false"


def test_typecheck_resolves_and_checks_theorems_without_constants():
    make_typed("theorem fine ⇔ 1 < 2;")
    with pytest.raises(TheoremFailed):
        typecheck_spec(make_spec("val N: ℕ = 4; theorem small ⇔ N < 3;"))


def test_integer_ranges_are_inferred():
    typed = make_typed("fun f(x:ℕ[3], y:ℤ[-2,2]): ℤ[-10,10] = x - y;")
    body = typed.operation("f").body
    assert body is not None
    assert body.type == IntType(-2, 5)
    assert typed.operation("f").result_check is None
    narrow = make_typed("fun g(x:ℕ[3]): ℕ[3] = x + 1;").operation("g")
    assert narrow.result_check == IntType(0, 3)


@pytest.mark.parametrize(
    "name, consts",
    [("gcd", {"N": 20}), ("max", {"N": 3, "M": 2}), ("primes", {"N": 30}), ("closure", {"N": 2})],
)
def test_corpus_typechecks(name, consts):
    typed = load_corpus(name, **consts)
    assert typed.operations
    assert typed.consts.unspecified == consts
