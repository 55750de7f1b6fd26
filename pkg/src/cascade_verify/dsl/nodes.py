"""Abstract syntax tree for cascade scripts.

All nodes are immutable.  Source positions are excluded from equality so
that a parsed script and its re-parsed canonical rendering compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..dictionary import Dimension


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True, eq=False)
class Const:
    value: Union[str, int, float, bool]

    # 1 == True == 1.0 in Python; constants of different kinds must not be equal
    def __eq__(self, other):
        return (
            isinstance(other, Const)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class SetRef:
    name: str


@dataclass(frozen=True)
class SetLiteral:
    items: tuple[Const, ...] = ()


Operand = Union[Var, Const]


@dataclass(frozen=True)
class Compare:
    """Chained comparison ``a op1 b op2 c``, meaning ``a op1 b and b op2 c``."""

    operands: tuple[Operand, ...]
    ops: tuple[str, ...]

    def __post_init__(self):
        if len(self.operands) < 2 or len(self.ops) != len(self.operands) - 1:
            raise ValueError("a comparison chain of k operands needs k-1 operators")


@dataclass(frozen=True)
class Membership:
    operand: Operand
    set: Union[SetLiteral, SetRef]
    negated: bool = False


@dataclass(frozen=True)
class Not:
    child: "Expr"


@dataclass(frozen=True)
class And:
    children: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Expr", ...]


Expr = Union[Var, Const, Compare, Membership, Not, And, Or]

COMPARISON_OPS = ("<", ">", "<=", ">=", "==", "!=")


@dataclass(frozen=True)
class MetaPredicate:
    dimension: Dimension
    value: str  # normalized label
    raw: str = ""  # value exactly as written, quotes included

    @property
    def text(self) -> str:
        return f"@{self.dimension.value}({self.raw or self.value})"


@dataclass(frozen=True)
class Statement:
    index: int
    label: str
    meta_predicates: tuple[MetaPredicate, ...]
    predicate: Expr
    action: bool
    source_span: Optional[tuple[int, int]] = field(default=None, compare=False)

    @property
    def line(self) -> int:
        return self.source_span[0] if self.source_span else 0


@dataclass(frozen=True)
class Script:
    constants: Mapping[str, SetLiteral]
    statements: tuple[Statement, ...]
    final_action: bool
    source_hash: str = field(default="", compare=False)


def extract_variables(predicate: Expr) -> set[str]:
    """Names of every record annotation referenced by ``predicate``."""
    found: set[str] = set()
    stack = [predicate]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node.name)
        elif isinstance(node, Compare):
            stack.extend(node.operands)
        elif isinstance(node, Membership):
            stack.append(node.operand)
        elif isinstance(node, Not):
            stack.append(node.child)
        elif isinstance(node, (And, Or)):
            stack.extend(node.children)
    return found


def ordered_variables(predicate: Expr) -> list[str]:
    """Variables in first-appearance order, left to right."""
    seen: dict[str, None] = {}

    def walk(node):
        if isinstance(node, Var):
            seen.setdefault(node.name)
        elif isinstance(node, Compare):
            for op in node.operands:
                walk(op)
        elif isinstance(node, Membership):
            walk(node.operand)
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or)):
            for child in node.children:
                walk(child)

    walk(predicate)
    return list(seen)


def conjuncts(expr: Expr) -> tuple[Expr, ...]:
    """Top-level conjuncts of ``expr`` (the expression itself if not an ``And``)."""
    if isinstance(expr, And):
        return expr.children
    return (expr,)


def conjoin(parts) -> Expr:
    parts = tuple(parts)
    if not parts:
        return Const(True)
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def negate(expr: Expr) -> Expr:
    """Syntactic negation that strips a leading ``not`` instead of stacking one."""
    if isinstance(expr, Not):
        return expr.child
    return Not(expr)
