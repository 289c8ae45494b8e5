"""Canonical Unicode rendering of the declaration AST.

The output re-parses to a structurally equal tree. The same functions render
the annotation text quoted in runtime error reports.
"""
from __future__ import annotations

from typing import Optional

from fspec.models import (
    Apply,
    ArrayInit,
    ArrayTypeExpr,
    Assert,
    Assign,
    Binary,
    Binder,
    Block,
    BoolLit,
    BoolTypeExpr,
    Card,
    Choose,
    ChooseCmd,
    ChooseDo,
    ChooseElse,
    Cmd,
    Contract,
    Decl,
    EmptySet,
    Expr,
    FieldSelect,
    For,
    ForIn,
    FunDecl,
    If,
    IfExpr,
    Index,
    IntLit,
    IntTypeExpr,
    Let,
    LoopSpec,
    MapInit,
    MapTypeExpr,
    NamedTypeExpr,
    NatTypeExpr,
    Param,
    PredDecl,
    Print,
    PrintCmd,
    ProcDecl,
    Quantified,
    Range,
    RecordExpr,
    RecordTypeExpr,
    Select,
    SetBuilder,
    SetLit,
    SetTypeExpr,
    Spec,
    Sum,
    TheoremDecl,
    TupleExpr,
    TupleTypeExpr,
    TypeDecl,
    TypeExpr,
    Unary,
    ValDecl,
    Var,
    VarDecl,
    While,
)

INDENT = "  "

# Binding strength; larger binds tighter.
_LEVELS: dict[str, int] = {
    "⇔": 1,
    "⇒": 2,
    "∨": 3,
    "∧": 4,
    "=": 5, "≠": 5, "<": 5, "≤": 5, ">": 5, "≥": 5, "∈": 5, "⊆": 5,
    "..": 6,
    "+": 7, "-": 7, "∪": 7, "\\": 7,
    "·": 8, "%": 8, "/": 8, "∩": 8,
    "^": 9,
}
_UNARY = 10
_POSTFIX = 11
_NON_ASSOCIATIVE = {"=", "≠", "<", "≤", ">", "≥", "∈", "⊆"}
_RIGHT_ASSOCIATIVE = {"⇒", "^"}
_TIGHT = {"^"}

_OPEN_ENDED = (Quantified, Sum, Choose, IfExpr, Let, Print)


def pretty_print(spec: Spec) -> str:
    """Render a whole specification; an empty one renders as ``""``."""
    if not spec.declarations:
        return ""
    return "\n\n".join(print_decl(decl) for decl in spec.declarations) + "\n"


# --- types -----------------------------------------------------------------


def print_type(type_expr: TypeExpr) -> str:
    match type_expr:
        case BoolTypeExpr():
            return "Bool"
        case NatTypeExpr(bound=None):
            return "ℕ"
        case NatTypeExpr(bound=bound):
            return f"ℕ[{print_expr(bound)}]"
        case IntTypeExpr(lo=lo, hi=hi):
            return f"ℤ[{print_expr(lo)}, {print_expr(hi)}]"
        case SetTypeExpr(elem=elem):
            return f"Set[{print_type(elem)}]"
        case TupleTypeExpr(elems=elems):
            return f"Tuple[{', '.join(print_type(e) for e in elems)}]"
        case RecordTypeExpr(fields=fields):
            inner = ", ".join(f"{name}:{print_type(t)}" for name, t in fields)
            return f"Record[{inner}]"
        case ArrayTypeExpr(length=length, elem=elem):
            return f"Array[{print_expr(length)}, {print_type(elem)}]"
        case MapTypeExpr(dom=dom, cod=cod):
            return f"Map[{print_type(dom)}, {print_type(cod)}]"
        case NamedTypeExpr(name=name):
            return name
    raise TypeError(f"not a type expression: {type_expr!r}")


# --- expressions -----------------------------------------------------------


def print_expr(expr: Expr, level: int = 0) -> str:
    """Render ``expr`` for a slot that demands binding strength ``level``.

    Open-ended phrases (quantifiers, choose, if, let, print) swallow
    everything to their right, so they are parenthesized in every slot
    except a delimited one (``level == 0``).
    """
    own = _level(expr)
    text = _render(expr)
    if own < level or (isinstance(expr, _OPEN_ENDED) and level > 0):
        return _parenthesize(text)
    return text


def _level(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _LEVELS[expr.op]
    if isinstance(expr, Range):
        return _LEVELS[".."]
    if isinstance(expr, Unary):
        return _UNARY
    if isinstance(expr, IntLit) and expr.value < 0:
        return _UNARY
    if isinstance(expr, _OPEN_ENDED):
        return 0
    return _POSTFIX


def _parenthesize(text: str) -> str:
    # "(|" would lex as an ASCII tuple bracket.
    if text.startswith("|"):
        return f"( {text})"
    return f"({text})"


def _args(exprs: tuple[Expr, ...]) -> str:
    text = ", ".join(print_expr(e) for e in exprs)
    return f" {text}" if text.startswith("|") else text


def _binders(binders: tuple[Binder, ...]) -> str:
    parts = []
    for binder in binders:
        if binder.type is not None:
            parts.append(f"{binder.name}:{print_type(binder.type)}")
        else:
            assert binder.domain is not None
            parts.append(f"{binder.name}∈{print_expr(binder.domain, 1)}")
    return ",".join(parts)


def _with(cond: Optional[Expr]) -> str:
    return "" if cond is None else f" with {print_expr(cond, 1)}"


def _render(expr: Expr) -> str:
    match expr:
        case IntLit(value=value):
            return str(value)
        case BoolLit(value=value):
            return "⊤" if value else "⊥"
        case Var(name=name):
            return name
        case Unary(op=op, operand=operand):
            return f"{op}{print_expr(operand, _UNARY)}"
        case Binary(op=op, left=left, right=right):
            own = _LEVELS[op]
            if op in _NON_ASSOCIATIVE:
                left_level, right_level = own + 1, own + 1
            elif op in _RIGHT_ASSOCIATIVE:
                left_level, right_level = own + 1, own
            else:
                left_level, right_level = own, own + 1
            if op == "^":
                left_level = _UNARY
            lhs = print_expr(left, left_level)
            rhs = print_expr(right, right_level)
            if op in _TIGHT:
                return f"{lhs}{op}{rhs}"
            return f"{lhs} {op} {rhs}"
        case Range(lo=lo, hi=hi):
            own = _LEVELS[".."]
            return f"{print_expr(lo, own + 1)}..{print_expr(hi, own + 1)}"
        case Apply(name=name, args=args):
            return f"{name}({_args(args)})"
        case TupleExpr(elems=elems):
            return f"⟨{_args(elems)}⟩"
        case RecordExpr(fields=fields):
            inner = ", ".join(f"{name}: {print_expr(value)}" for name, value in fields)
            return f"⟨{inner}⟩"
        case Select(expr=inner, index=index):
            return f"{print_expr(inner, _POSTFIX)}.{index}"
        case FieldSelect(expr=inner, name=name):
            return f"{print_expr(inner, _POSTFIX)}.{name}"
        case Index(expr=inner, index=index):
            return f"{print_expr(inner, _POSTFIX)}[{print_expr(index)}]"
        case ArrayInit(length=length, elem=elem, value=value):
            return f"Array[{print_expr(length)}, {print_type(elem)}]({print_expr(value)})"
        case MapInit(dom=dom, cod=cod, value=value):
            return f"Map[{print_type(dom)}, {print_type(cod)}]({print_expr(value)})"
        case SetLit(elems=elems):
            return f"{{{_args(elems)}}}"
        case EmptySet(elem=elem):
            return f"∅[{print_type(elem)}]"
        case Card(expr=inner):
            text = print_expr(inner)
            if text.startswith("|") or text.endswith("|"):
                return f"| {text} |"
            return f"|{text}|"
        case SetBuilder(expr=element, binders=binders, cond=cond):
            return f"{{{print_expr(element, 1)} | {_binders(binders)}{_with(cond)}}}"
        case Quantified(quantifier=quantifier, binders=binders, cond=cond, body=body):
            return f"{quantifier}{_binders(binders)}{_with(cond)}. {print_expr(body)}"
        case Sum(binders=binders, cond=cond, body=body):
            return f"∑{_binders(binders)}{_with(cond)}. {print_expr(body)}"
        case Choose(binders=binders, cond=cond):
            return f"choose {_binders(binders)}{_with(cond)}"
        case IfExpr(cond=cond, then=then, else_=else_):
            return f"if {print_expr(cond)} then {print_expr(then)} else {print_expr(else_)}"
        case Let(name=name, value=value, body=body):
            # A bare "∈" in the definition would end it early.
            return f"let {name} = {print_expr(value, _POSTFIX)} in {print_expr(body)}"
        case Print(expr=inner):
            return f"print {print_expr(inner)}"
    raise TypeError(f"not an expression: {expr!r}")


# --- annotations -----------------------------------------------------------


def print_clause(keyword: str, expr: Expr) -> str:
    """Render a single annotation such as ``ensures result = gcd(m, n);``."""
    return f"{keyword} {print_expr(expr)};"


# --- commands --------------------------------------------------------------


def print_command(cmd: Cmd, depth: int = 0) -> str:
    return "\n".join(_command_lines(cmd, depth))


def _pad(depth: int) -> str:
    return INDENT * depth


def _dangles(cmd: Cmd) -> bool:
    """True if an ``else`` printed after ``cmd`` would attach inside it."""
    match cmd:
        case If(else_=None):
            return True
        case If(else_=else_) | ChooseElse(else_=else_):
            assert else_ is not None
            return _dangles(else_)
        case While(body=body) | For(body=body) | ForIn(body=body) | ChooseDo(body=body):
            return _dangles(body)
    return False


def _loop_lines(loop: LoopSpec, depth: int) -> list[str]:
    lines = [_pad(depth) + print_clause("invariant", inv) for inv in loop.invariants]
    if loop.decreases is not None:
        lines.append(_pad(depth) + print_clause("decreases", loop.decreases))
    return lines


def _nested_lines(cmd: Cmd, depth: int) -> list[str]:
    if isinstance(cmd, Block):
        return _command_lines(cmd, depth - 1)
    return _command_lines(cmd, depth)


def _var_decl(decl: VarDecl) -> str:
    return f"var {decl.name}:{print_type(decl.type)} := {print_expr(decl.init)}"


def _assign(assign: Assign) -> str:
    target = assign.name + "".join(f"[{print_expr(i)}]" for i in assign.indices)
    return f"{target} := {print_expr(assign.value)}"


def _command_lines(cmd: Cmd, depth: int) -> list[str]:
    pad = _pad(depth)
    match cmd:
        case VarDecl():
            return [f"{pad}{_var_decl(cmd)};"]
        case Assign():
            return [f"{pad}{_assign(cmd)};"]
        case Block(cmds=cmds):
            lines = [f"{pad}{{"]
            for inner in cmds:
                lines.extend(_command_lines(inner, depth + 1))
            lines.append(f"{pad}}}")
            return lines
        case If(cond=cond, then=then, else_=else_):
            lines = [f"{pad}if {print_expr(cond)} then"]
            if else_ is not None and _dangles(then):
                then = Block((then,))
            lines.extend(_nested_lines(then, depth + 1))
            if else_ is not None:
                lines.append(f"{pad}else")
                lines.extend(_nested_lines(else_, depth + 1))
            return lines
        case While(cond=cond, loop=loop, body=body):
            lines = [f"{pad}while {print_expr(cond)} do"]
            lines.extend(_loop_lines(loop, depth + 1))
            lines.extend(_nested_lines(body, depth + 1))
            return lines
        case For(init=init, cond=cond, update=update, loop=loop, body=body):
            lines = [f"{pad}for {_var_decl(init)}; {print_expr(cond)}; {_assign(update)} do"]
            lines.extend(_loop_lines(loop, depth + 1))
            lines.extend(_nested_lines(body, depth + 1))
            return lines
        case ForIn(name=name, domain=domain, cond=cond, loop=loop, body=body):
            lines = [f"{pad}for {name} ∈ {print_expr(domain, 1)}{_with(cond)} do"]
            lines.extend(_loop_lines(loop, depth + 1))
            lines.extend(_nested_lines(body, depth + 1))
            return lines
        case ChooseCmd(binders=binders, cond=cond):
            return [f"{pad}choose {_binders(binders)}{_with(cond)};"]
        case ChooseElse(binders=binders, cond=cond, then=then, else_=else_):
            lines = [f"{pad}choose {_binders(binders)}{_with(cond)} then"]
            if _dangles(then):
                then = Block((then,))
            lines.extend(_nested_lines(then, depth + 1))
            lines.append(f"{pad}else")
            lines.extend(_nested_lines(else_, depth + 1))
            return lines
        case ChooseDo(binders=binders, cond=cond, loop=loop, body=body):
            lines = [f"{pad}choose {_binders(binders)}{_with(cond)} do"]
            lines.extend(_loop_lines(loop, depth + 1))
            lines.extend(_nested_lines(body, depth + 1))
            return lines
        case Assert(formula=formula):
            return [pad + print_clause("assert", formula)]
        case PrintCmd(expr=printed):
            return [pad + print_clause("print", printed)]
    raise TypeError(f"not a command: {cmd!r}")


# --- declarations ----------------------------------------------------------


def _params(params: tuple[Param, ...]) -> str:
    return ", ".join(f"{p.name}:{print_type(p.type)}" for p in params)


def _contract_lines(contract: Contract) -> list[str]:
    lines = [INDENT + print_clause("requires", f) for f in contract.requires]
    lines.extend(INDENT + print_clause("ensures", f) for f in contract.ensures)
    if contract.decreases is not None:
        lines.append(INDENT + print_clause("decreases", contract.decreases))
    return lines


def _with_body(head: str, contract: Contract, joiner: str, body: Expr) -> str:
    clauses = _contract_lines(contract)
    if not clauses:
        return f"{head} {joiner} {print_expr(body)};"
    return "\n".join([head, *clauses, f"{joiner} {print_expr(body)};"])


def print_decl(decl: Decl) -> str:
    match decl:
        case ValDecl(name=name, type=type_, value=value):
            text = f"val {name}"
            if type_ is not None:
                text += f": {print_type(type_)}"
            if value is not None:
                text += f" = {print_expr(value)}"
            return text + ";"
        case TypeDecl(name=name, type=type_):
            return f"type {name} = {print_type(type_)};"
        case PredDecl(name=name, params=params, contract=contract, body=body):
            return _with_body(f"pred {name}({_params(params)})", contract, "⇔", body)
        case TheoremDecl(name=name, params=params, contract=contract, body=body):
            head = f"theorem {name}({_params(params)})" if params else f"theorem {name}"
            return _with_body(head, contract, "⇔", body)
        case FunDecl(name=name, params=params, result=result, contract=contract, body=body):
            head = f"fun {name}({_params(params)}): {print_type(result)}"
            return _with_body(head, contract, "=", body)
        case ProcDecl(name=name, params=params, result=result, contract=contract, body=body, ret=ret):
            lines = [f"proc {name}({_params(params)}): {print_type(result)}"]
            lines.extend(_contract_lines(contract))
            lines.append("{")
            for cmd in body:
                lines.extend(_command_lines(cmd, 1))
            lines.append(f"{INDENT}return {print_expr(ret)};")
            lines.append("}")
            return "\n".join(lines)
    raise TypeError(f"not a declaration: {decl!r}")
