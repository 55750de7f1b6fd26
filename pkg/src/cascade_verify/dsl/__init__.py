from .nodes import (
    And,
    Compare,
    Const,
    Expr,
    Membership,
    MetaPredicate,
    Not,
    Or,
    Script,
    SetLiteral,
    SetRef,
    Statement,
    Var,
    conjoin,
    conjuncts,
    extract_variables,
    negate,
    ordered_variables,
)
from .parser import parse_predicate, parse_script, parse_set_literal, script_hash
from .render import render_expr, render_script

__all__ = [
    "And", "Compare", "Const", "Expr", "Membership", "MetaPredicate", "Not", "Or",
    "Script", "SetLiteral", "SetRef", "Statement", "Var",
    "conjoin", "conjuncts", "extract_variables", "negate", "ordered_variables",
    "parse_predicate", "parse_script", "parse_set_literal", "script_hash",
    "render_expr", "render_script",
]
