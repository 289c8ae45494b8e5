import io
from pathlib import Path

import pytest

from fspec.checker import CheckOptions, check_operation
from fspec.errors import ArityMismatch, TheoremViolated, UnknownPredicate
from fspec.models import FunDecl, TheoremDecl
from fspec.reader import parse_source
from fspec.scaffold import (
    SpecSkeleton,
    extend_spec,
    generate_validation_theorems,
    render_validation_theorems,
    skeleton_from_spec,
    weak_post_not_valid,
)
from fspec.semantics import resolve_constants, typecheck_spec

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

TRIVIAL = (
    "val N: ℕ;\n"
    "pred pre(x:ℕ[N]) ⇔ ⊤;\n"
    "pred post(x:ℕ[N], y:ℕ[N]) ⇔ ⊤;\n"
)


def make_spec(text: str, filename: str = "test.fspec"):
    return parse_source(text, filename)


def max_spec():
    return make_spec((CORPUS / "max.fspec").read_text(encoding="utf-8"), "max.fspec")


def test_skeleton_takes_inputs_from_precondition():
    skel = skeleton_from_spec(max_spec(), "Pre", "Post")
    assert [p.name for p in skel.inputs] == ["a", "n"]
    assert skel.output.name == "m"
    assert skel.name("Fun") == "Post_Fun"


def test_generated_declarations():
    declarations = generate_validation_theorems(skeleton_from_spec(max_spec(), "Pre", "Post"))
    assert [d.name for d in declarations] == [
        "Post_preSat",
        "Post_postNotValid",
        "Post_postSat",
        "Post_resultUnique",
        "Post_Fun",
    ]
    assert all(isinstance(d, TheoremDecl) for d in declarations[:4])
    assert isinstance(declarations[4], FunDecl)
    assert declarations[0].params == ()
    assert [p.name for p in declarations[3].params] == ["a", "n", "m1", "m2"]


def test_rendered_text():
    text = render_validation_theorems(skeleton_from_spec(max_spec(), "Pre", "Post"))
    blocks = text.rstrip("\n").split("\n\n")
    assert blocks[0] == "theorem Post_preSat ⇔ ∃a:array,n:index. Pre(a, n);"
    assert blocks[1] == "theorem Post_postNotValid(a:array, n:index) ⇔ Pre(a, n) ⇒ (∃m:elem. ¬Post(a, n, m));"
    assert blocks[2].startswith("// theorem Post_postNotValidWeak ⇔ ∃a:array,n:index,m:elem. ")
    assert blocks[-1] == (
        "fun Post_Fun(a:array, n:index): elem\n"
        "  requires Pre(a, n);\n"
        "= choose m:elem with Post(a, n, m);"
    )


def test_weak_form():
    weak = weak_post_not_valid(skeleton_from_spec(max_spec(), "Pre", "Post"))
    assert weak.name == "Post_postNotValidWeak"
    assert weak.params == ()


def test_unknown_predicate():
    with pytest.raises(UnknownPredicate) as info:
        skeleton_from_spec(max_spec(), "Pre", "Postcondition")
    assert info.value.name == "Postcondition"
    # maxFun is a function, not a predicate.
    with pytest.raises(UnknownPredicate):
        skeleton_from_spec(max_spec(), "Pre", "maxFun")


def test_postcondition_arity_must_match():
    with pytest.raises(ArityMismatch):
        skeleton_from_spec(max_spec(), "Pre", "Pre")


def test_skeleton_is_checked_against_the_spec():
    spec = make_spec(TRIVIAL)
    skel = skeleton_from_spec(spec, "pre", "post")
    wider = SpecSkeleton("pre", "post", skel.inputs + (skel.output,), skel.output)
    with pytest.raises(ArityMismatch):
        generate_validation_theorems(wider, spec)
    missing = SpecSkeleton("nothing", "post", skel.inputs, skel.output)
    with pytest.raises(UnknownPredicate):
        generate_validation_theorems(missing, spec)


def test_extended_spec_round_trips():
    spec = make_spec(TRIVIAL)
    text = extend_spec(spec, skeleton_from_spec(spec, "pre", "post"))
    extended = make_spec(text)
    assert [d.name for d in extended.declarations][-5:] == [
        "post_preSat", "post_postNotValid", "post_postSat", "post_resultUnique", "post_Fun",
    ]
    assert "// theorem post_postNotValidWeak" in text


def test_trivial_postcondition_is_caught():
    spec = make_spec(TRIVIAL)
    extended = make_spec(extend_spec(spec, skeleton_from_spec(spec, "pre", "post")))
    typed = typecheck_spec(extended, resolve_constants(extended, {"N": 3}))
    out = io.StringIO()

    report = check_operation(typed, None, CheckOptions(operation="post_postSat", silent=True), out)
    assert report.ok and report.checked == 4

    report = check_operation(typed, None, CheckOptions(operation="post_postNotValid", silent=True), out)
    assert report.first_error is not None
    assert report.first_error.index == 0
    assert isinstance(report.first_error.error, TheoremViolated)

    report = check_operation(typed, None, CheckOptions(operation="post_resultUnique", silent=True), out)
    assert isinstance(report.first_error.error, TheoremViolated)
    assert report.first_error.args == (0, 0, 1)


@pytest.mark.slow
def test_max_validation_suite():
    spec = max_spec()
    extended = make_spec(extend_spec(spec, skeleton_from_spec(spec, "Pre", "Post")), "max.fspec")
    typed = typecheck_spec(extended, resolve_constants(extended, {"N": 3, "M": 2}))
    expected = {
        "Post_postNotValid": (875, 0),
        "Post_postSat": (875, 0),
        "Post_resultUnique": (21875, 0),
        "Post_Fun": (155, 720),
    }
    for name, counts in expected.items():
        report = check_operation(typed, None, CheckOptions(operation=name, silent=True), io.StringIO())
        assert report.ok, name
        assert (report.checked, report.inadmissible) == counts
