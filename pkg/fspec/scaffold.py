"""
Validation declarations for a precondition/postcondition pair.

Given ``pred P(x)`` and ``pred Q(x, y)`` the generator writes the theorems
that show the pair is a sensible specification (the precondition can be
met, the postcondition is neither trivially true nor unsatisfiable, and it
determines the result) plus a function defined implicitly by Q. Generation
is purely syntactic; nothing is evaluated here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from fspec.errors import ArityMismatch, UnknownPredicate
from fspec.models import (
    Apply,
    Binary,
    Binder,
    Choose,
    Contract,
    Decl,
    Expr,
    FunDecl,
    Param,
    PredDecl,
    Quantified,
    Spec,
    TheoremDecl,
    Unary,
    Var,
)
from fspec.printer import pretty_print, print_decl

LOG = logging.getLogger(__name__)

SUFFIXES = ("preSat", "postNotValid", "postSat", "resultUnique", "Fun")
WEAK_SUFFIX = "postNotValidWeak"


@dataclass(frozen=True)
class SpecSkeleton:
    pre_name: str
    post_name: str
    inputs: tuple[Param, ...]
    output: Param

    def name(self, suffix: str) -> str:
        return f"{self.post_name}_{suffix}"


def _predicate(spec: Spec, name: str) -> PredDecl:
    decl = spec.find(name)
    if not isinstance(decl, PredDecl):
        raise UnknownPredicate(name)
    return decl


def skeleton_from_spec(spec: Spec, pre_name: str, post_name: str) -> SpecSkeleton:
    """
    Build a skeleton from two predicates of ``spec``.

    The inputs are the parameters of the precondition and the output is the
    last parameter of the postcondition.

    Raises:
        UnknownPredicate: If either name is not a predicate of ``spec``.
        ArityMismatch: If the postcondition does not take the inputs plus one output.
    """
    pre = _predicate(spec, pre_name)
    post = _predicate(spec, post_name)
    if len(post.params) != len(pre.params) + 1:
        raise ArityMismatch(
            f"{post_name} takes {len(post.params)} parameters, "
            f"expected {len(pre.params) + 1} ({pre_name}'s inputs and one output)",
            post.span,
        )
    return SpecSkeleton(pre_name, post_name, pre.params, post.params[-1])


def _check_against(spec: Spec, skel: SpecSkeleton) -> None:
    pre = _predicate(spec, skel.pre_name)
    post = _predicate(spec, skel.post_name)
    if len(pre.params) != len(skel.inputs):
        raise ArityMismatch(f"{skel.pre_name} takes {len(pre.params)} parameters, "
                            f"the skeleton has {len(skel.inputs)} inputs", pre.span)
    if len(post.params) != len(skel.inputs) + 1:
        raise ArityMismatch(f"{skel.post_name} takes {len(post.params)} parameters, "
                            f"the skeleton has {len(skel.inputs)} inputs and one output", post.span)


def _vars(params: tuple[Param, ...]) -> tuple[Expr, ...]:
    return tuple(Var(p.name) for p in params)


def _binders(params: tuple[Param, ...]) -> tuple[Binder, ...]:
    return tuple(Binder(p.name, type=p.type) for p in params)


def _renamed(param: Param, name: str) -> Param:
    return Param(name, param.type)


def generate_validation_theorems(skel: SpecSkeleton, spec: Optional[Spec] = None) -> list[Decl]:
    """
    The five validation declarations for ``skel``, named ``<post>_<suffix>``.

    With ``spec`` given, the skeleton's predicates are first looked up in it.

    Raises:
        UnknownPredicate: If a predicate name does not resolve in ``spec``.
        ArityMismatch: If the predicates do not match the skeleton's parameters.
    """
    if spec is not None:
        _check_against(spec, skel)
    inputs = skel.inputs
    x = _vars(inputs)
    y = Var(skel.output.name)

    def pre() -> Expr:
        return Apply(skel.pre_name, x)

    def post(result: Expr) -> Expr:
        return Apply(skel.post_name, x + (result,))

    out = skel.output
    first = _renamed(out, f"{out.name}1")
    second = _renamed(out, f"{out.name}2")
    unique = Binary(
        "⇒",
        Binary("∧", Binary("∧", pre(), post(Var(first.name))), post(Var(second.name))),
        Binary("=", Var(first.name), Var(second.name)),
    )
    declarations: list[Decl] = [
        TheoremDecl(skel.name("preSat"), (), Contract(), Quantified("∃", _binders(inputs), None, pre())),
        TheoremDecl(skel.name("postNotValid"), inputs, Contract(),
                    Binary("⇒", pre(), Quantified("∃", _binders((out,)), None, Unary("¬", post(y))))),
        TheoremDecl(skel.name("postSat"), inputs, Contract(),
                    Binary("⇒", pre(), Quantified("∃", _binders((out,)), None, post(y)))),
        TheoremDecl(skel.name("resultUnique"), inputs + (first, second), Contract(), unique),
        FunDecl(skel.name("Fun"), inputs, out.type, Contract(requires=(pre(),)),
                Choose(_binders((out,)), post(y))),
    ]
    LOG.debug("generated %s", ", ".join(d.name for d in declarations))
    return declarations


def weak_post_not_valid(skel: SpecSkeleton) -> TheoremDecl:
    """The weaker form: some admissible input has an output violating the postcondition."""
    x = _vars(skel.inputs)
    body = Quantified(
        "∃",
        _binders(skel.inputs + (skel.output,)),
        None,
        Binary("∧", Apply(skel.pre_name, x), Unary("¬", Apply(skel.post_name, x + (Var(skel.output.name),)))),
    )
    return TheoremDecl(skel.name(WEAK_SUFFIX), (), Contract(), body)


def render_validation_theorems(skel: SpecSkeleton, spec: Optional[Spec] = None) -> str:
    """Generated declarations as source text, the weak form commented out."""
    blocks = [print_decl(decl) for decl in generate_validation_theorems(skel, spec)]
    weak = print_decl(weak_post_not_valid(skel)).splitlines()
    blocks.insert(2, "\n".join("// " + line for line in weak))
    return "\n\n".join(blocks) + "\n"


def extend_spec(spec: Spec, skel: SpecSkeleton) -> str:
    """Source text of ``spec`` followed by the validation declarations."""
    return pretty_print(spec) + "\n" + render_validation_theorems(skel, spec)
