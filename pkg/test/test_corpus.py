import io
import itertools
from pathlib import Path

import pytest

from fspec.checker import CheckOptions, check_operation, enumerate_inputs
from fspec.errors import Inadmissible
from fspec.evaluator import EvalMode, invoke_operation
from fspec.reader import parse_source
from fspec.semantics import resolve_constants, typecheck_spec
from fspec.typed import TypedSpec
from fspec.values import format_value

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load_corpus(name: str, **consts: int) -> TypedSpec:
    text = (CORPUS / f"{name}.fspec").read_text(encoding="utf-8")
    spec = parse_source(text, f"{name}.fspec")
    return typecheck_spec(spec, resolve_constants(spec, consts))


def counts(typed: TypedSpec, operation: str, mode: EvalMode = EvalMode.DETERMINISTIC) -> tuple[int, int, int]:
    opts = CheckOptions(operation=operation, mode=mode, silent=True)
    report = check_operation(typed, None, opts, io.StringIO())
    assert report.ok, report.first_error
    assert report.checked + report.inadmissible == report.total
    return report.total, report.checked, report.inadmissible


def test_gcd_small_instance_passes_everywhere():
    typed = load_corpus("gcd", N=6)
    for name in ("gcd", "gcd0", "gcd1", "gcd2", "gcdp"):
        for mode in EvalMode:
            counts(typed, name, mode)


def assert_first_branch_is_deterministic(typed: TypedSpec, name: str) -> None:
    op = typed.operation(name)
    for args in enumerate_inputs(op):
        try:
            det = invoke_operation(op, args, EvalMode.DETERMINISTIC).first()
        except Inadmissible:
            continue
        assert det == invoke_operation(op, args, EvalMode.NONDETERMINISTIC).first(), (name, args)


@pytest.mark.parametrize("corpus, consts, names", [
    ("gcd", {"N": 6}, ("gcd", "gcdp")),
    ("max", {"N": 2, "M": 1}, ("maxFun", "maxProc")),
    ("primes", {"N": 10}, ("SieveOfEratosthenesSet", "SieveOfEratosthenesArray")),
    ("closure", {"N": 1}, ("transitiveClosureI", "transitiveClosureR", "transitiveClosureP")),
])
def test_first_branch_is_the_deterministic_result(corpus, consts, names):
    typed = load_corpus(corpus, **consts)
    for name in names:
        assert_first_branch_is_deterministic(typed, name)


@pytest.mark.slow
@pytest.mark.parametrize("corpus, consts, names", [
    ("gcd", {"N": 20}, ("gcd", "gcdp")),
    ("max", {"N": 3, "M": 2}, ("maxFun", "maxProc")),
    ("primes", {"N": 30}, ("SieveOfEratosthenesSet", "SieveOfEratosthenesArray")),
    ("closure", {"N": 2}, ("transitiveClosureI", "transitiveClosureR", "transitiveClosureP")),
])
def test_first_branch_is_the_deterministic_result_at_full_size(corpus, consts, names):
    typed = load_corpus(corpus, **consts)
    for name in names:
        assert_first_branch_is_deterministic(typed, name)


def test_max_at_small_bounds():
    typed = load_corpus("max", N=2, M=1)
    total, checked, inadmissible = counts(typed, "maxProc")
    assert total == 9 * 5
    assert checked == counts(typed, "maxFun")[1]
    assert inadmissible > 0


@pytest.mark.slow
def test_max_corpus():
    typed = load_corpus("max", N=3, M=2)
    assert counts(typed, "postNotValid") == (875, 875, 0)
    assert counts(typed, "postSat") == (875, 875, 0)
    assert counts(typed, "resultUnique") == (21875, 21875, 0)
    assert counts(typed, "maxFun") == (875, 155, 720)
    assert counts(typed, "maxProc") == (875, 155, 720)
    for name in ("VC1", "VC2", "VC3", "VC4", "VC5"):
        assert counts(typed, name) == (30625, 5425, 25200)


@pytest.mark.slow
def test_primes_corpus():
    typed = load_corpus("primes", N=30)
    assert counts(typed, "leastProperDivisor") == (961, 961, 0)
    assert counts(typed, "SieveOfEratosthenesArray") == (31, 31, 0)
    assert counts(typed, "SieveOfEratosthenesSet", EvalMode.NONDETERMINISTIC) == (31, 31, 0)


def test_primes_at_small_bound():
    typed = load_corpus("primes", N=10)
    assert counts(typed, "leastProperDivisor") == (121, 121, 0)
    assert counts(typed, "SieveOfEratosthenesArray") == (11, 11, 0)
    assert counts(typed, "SieveOfEratosthenesSet") == (11, 11, 0)


def test_closure_on_a_small_carrier():
    typed = load_corpus("closure", N=1)
    for name in ("transitiveClosureExists", "transitiveClosureIsUnique", "transitiveClosureR",
                 "transitiveClosureCorrectness", "transitiveClosureP"):
        assert counts(typed, name) == (16, 16, 0)


@pytest.mark.slow
def test_closure_corpus():
    typed = load_corpus("closure", N=2)
    for name in ("transitiveClosureExists", "transitiveClosureIsUnique", "transitiveClosureR",
                 "transitiveClosureCorrectness", "transitiveClosureP"):
        assert counts(typed, name) == (512, 512, 0)


@pytest.mark.slow
def test_closure_definitions_agree():
    typed = load_corpus("closure", N=2)
    implicit = typed.operation("transitiveClosureI")
    recursive = typed.operation("transitiveClosureR")
    iterative = typed.operation("transitiveClosureP")
    for args in enumerate_inputs(recursive):
        expected = invoke_operation(recursive, args, EvalMode.DETERMINISTIC).first()
        assert invoke_operation(iterative, args, EvalMode.DETERMINISTIC).first() == expected
        assert invoke_operation(implicit, args, EvalMode.DETERMINISTIC).first() == expected


def test_implicit_closure_of_a_cyclic_relation():
    typed = load_corpus("closure", N=2)
    relation = frozenset({(1, 0), (0, 1), (2, 1), (0, 2)})
    result = invoke_operation(typed.operation("transitiveClosureI"), (relation,), EvalMode.DETERMINISTIC).first()
    assert result == frozenset(itertools.product(range(3), repeat=2))
    assert format_value(result) == "{[0,0],[0,1],[0,2],[1,0],[1,1],[1,2],[2,0],[2,1],[2,2]}"
