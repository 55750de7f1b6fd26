"""Canonical text rendering of scripts and expressions."""

from __future__ import annotations

from .nodes import And, Compare, Const, Membership, Not, Or, Script, SetLiteral, SetRef, Var

_STRING_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def render_const(const: Const) -> str:
    value = const.value
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, str):
        return '"' + "".join(_STRING_ESCAPES.get(ch, ch) for ch in value) + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_set(node) -> str:
    if isinstance(node, SetRef):
        return node.name
    return "{" + ", ".join(render_const(c) for c in node.items) + "}"


def _operand(node) -> str:
    return node.name if isinstance(node, Var) else render_const(node)


def render_expr(node) -> str:
    if isinstance(node, (Var, Const)):
        return _operand(node)
    if isinstance(node, Compare):
        parts = [_operand(node.operands[0])]
        for op, operand in zip(node.ops, node.operands[1:]):
            parts.append(op)
            parts.append(_operand(operand))
        return " ".join(parts)
    if isinstance(node, Membership):
        keyword = "not in" if node.negated else "in"
        return f"{_operand(node.operand)} {keyword} {render_set(node.set)}"
    if isinstance(node, Not):
        inner = render_expr(node.child)
        if isinstance(node.child, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(node, And):
        return " and ".join(
            f"({render_expr(c)})" if isinstance(c, (And, Or)) else render_expr(c)
            for c in node.children
        )
    if isinstance(node, Or):
        return " or ".join(
            f"({render_expr(c)})" if isinstance(c, Or) else render_expr(c)
            for c in node.children
        )
    raise TypeError(f"cannot render {node!r}")


def render_script(script: Script) -> str:
    """Deterministic canonical text; parsing it yields an equal ``Script``."""
    out: list[str] = []
    for name, literal in script.constants.items():
        out.append(f"{name} = {render_set(literal)}\n")
    if script.constants:
        out.append("\n")
    for stmt in script.statements:
        if stmt.label:
            out.append(f"# {stmt.label}\n")
        if stmt.meta_predicates:
            out.append('"""\n')
            for meta in stmt.meta_predicates:
                out.append(meta.text + "\n")
            out.append('"""\n')
        out.append(f"if ({render_expr(stmt.predicate)}):\n")
        out.append(f"    return {stmt.action}\n")
        out.append("\n")
    out.append(f"return {script.final_action}\n")
    return "".join(out)
