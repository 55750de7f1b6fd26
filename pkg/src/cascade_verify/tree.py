"""Decision trees, their conversion to first-match cascades, and an
exhaustive equivalence oracle over a finite input grid."""

from __future__ import annotations

import itertools
import json
import math
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

from .dsl import (
    And,
    Compare,
    Const,
    Membership,
    Not,
    Or,
    Script,
    SetLiteral,
    SetRef,
    Statement,
    Var,
    conjoin,
    conjuncts,
    negate,
    parse_predicate,
    render_expr,
    render_script,
    script_hash,
)
from .dsl.render import render_const
from .engine import _NOT, TriState, compile_predicate
from .errors import (
    DomainTooLarge,
    IncompleteDomain,
    ScriptSyntaxError,
    SimplificationUnsound,
    TreeFormatError,
)
from .records import MISSING

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class Leaf:
    action: bool


@dataclass(frozen=True)
class Branch:
    condition: object
    then: "Node"
    otherwise: "Node"


Node = Union[Leaf, Branch]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    constants: Mapping[str, SetLiteral] = field(default_factory=dict)


def _as_tree(tree) -> DecisionTree:
    return tree if isinstance(tree, DecisionTree) else DecisionTree(tree)


# -- file format -------------------------------------------------------------


def _constant_set(name: str, spec) -> SetLiteral:
    if not isinstance(spec, list):
        raise TreeFormatError(f"constant {name!r} must be a list of values")
    items = []
    for value in spec:
        if isinstance(value, float) and not math.isfinite(value):
            raise TreeFormatError(f"constant {name!r} holds a non-finite number")
        if not isinstance(value, (str, int, float, bool)):
            raise TreeFormatError(f"constant {name!r} holds a non-scalar value")
        items.append(Const(value))
    return SetLiteral(tuple(items))


def _read_node(spec, constants, path: str) -> Node:
    if not isinstance(spec, dict):
        raise TreeFormatError(f"{path}: node must be an object")
    keys = set(spec)
    if keys == {"return"}:
        if not isinstance(spec["return"], bool):
            raise TreeFormatError(f"{path}: return value must be true or false")
        return Leaf(spec["return"])
    if keys == {"if", "then", "else"}:
        if not isinstance(spec["if"], str):
            raise TreeFormatError(f"{path}: condition must be predicate text")
        try:
            condition = parse_predicate(spec["if"], constants)
        except ScriptSyntaxError as exc:
            raise TreeFormatError(f"{path}: {exc}") from None
        return Branch(
            condition,
            _read_node(spec["then"], constants, path + ".then"),
            _read_node(spec["else"], constants, path + ".else"),
        )
    raise TreeFormatError(f"{path}: expected {{if, then, else}} or {{return}}, got {sorted(keys)}")


def load_tree(text: str) -> DecisionTree:
    """Read a tree file: a node object, or ``{"constants": {...}, "tree": node}``."""
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise TreeFormatError(f"invalid JSON: {exc}") from None
    constants: dict[str, SetLiteral] = {}
    if isinstance(data, dict) and "tree" in data:
        extra = set(data) - {"tree", "constants"}
        if extra:
            raise TreeFormatError(f"unknown top-level field(s): {sorted(extra)}")
        raw = data.get("constants", {})
        if not isinstance(raw, dict):
            raise TreeFormatError("constants must map names to lists")
        constants = {name: _constant_set(name, spec) for name, spec in raw.items()}
        data = data["tree"]
    return DecisionTree(_read_node(data, constants, "tree"), constants)


def _node_to_json(node: Node):
    if isinstance(node, Leaf):
        return {"return": node.action}
    return {
        "if": render_expr(node.condition),
        "then": _node_to_json(node.then),
        "else": _node_to_json(node.otherwise),
    }


def dump_tree(tree) -> str:
    tree = _as_tree(tree)
    body = _node_to_json(tree.root)
    if tree.constants:
        body = {
            "constants": {k: [c.value for c in v.items] for k, v in tree.constants.items()},
            "tree": body,
        }
    return json.dumps(body, indent=2)


# -- conversion --------------------------------------------------------------


def _edge_conjuncts(condition, taken: bool) -> tuple:
    if taken:
        return conjuncts(condition)
    return (negate(condition),)


def tree_paths(tree) -> list[tuple[tuple, bool]]:
    """Root-to-leaf paths in depth-first, then-before-else order."""
    tree = _as_tree(tree)
    paths = []
    stack = [(tree.root, ())]
    while stack:
        node, conds = stack.pop()
        if isinstance(node, Leaf):
            paths.append((conds, node.action))
            continue
        stack.append((node.otherwise, conds + _edge_conjuncts(node.condition, False)))
        stack.append((node.then, conds + _edge_conjuncts(node.condition, True)))
    return paths


def _build_script(constants, rules: Sequence[tuple], final_action: bool, template=None) -> Script:
    statements = []
    for index, (parts, action, old) in enumerate(rules):
        predicate = conjoin(parts)
        if old is not None:
            if conjuncts(old.predicate) == tuple(parts):
                predicate = old.predicate
            statements.append(
                Statement(index, old.label, old.meta_predicates, predicate, action, old.source_span)
            )
        else:
            statements.append(Statement(index, "", (), predicate, action))
    script = Script(dict(constants), tuple(statements), final_action)
    return Script(script.constants, script.statements, final_action, script_hash(render_script(script)))


def tree_to_cascade(tree) -> Script:
    """Convert a tree into an equivalent first-match cascade.

    Each path becomes one rule whose predicate conjoins the path's edge
    conditions.  The last path supplies the default action.
    """
    tree = _as_tree(tree)
    paths = tree_paths(tree)
    *rules, (_, final_action) = paths
    return _build_script(tree.constants, [(conds, action, None) for conds, action in rules], final_action)


# -- structural checks -------------------------------------------------------


def _is_literal(expr) -> bool:
    if isinstance(expr, Not):
        return _is_literal(expr.child)
    if isinstance(expr, (Var, Const, Membership)):
        return True
    return isinstance(expr, Compare) and len(expr.operands) == 2


def is_one_decision_list(script: Script) -> tuple[bool, list[int]]:
    """Whether every rule tests a single (possibly negated) literal."""
    offending = [s.index for s in script.statements if not _is_literal(s.predicate)]
    return (not offending, offending)


# -- simplification ----------------------------------------------------------


def _dedupe(parts: list) -> list:
    out = []
    for p in parts:
        if p not in out:
            out.append(p)
    return out


def _disjoint(a: list, b: list) -> bool:
    """True when some conjunct of ``a`` is the syntactic negation of one in ``b``."""
    return any(negate(x) in b for x in a)


def _strip_negated_rules(rules: list) -> bool:
    """Drop ``not x`` from a rule when an earlier rule is exactly ``x``."""
    changed = False
    for j, (parts, _, _) in enumerate(rules):
        singles = {next(iter(e[0])) for e in rules[:j] if len(e[0]) == 1}
        for c in list(parts):
            if negate(c) in singles:
                parts.remove(c)
                changed = True
    return changed


def _drop_rules(rules: list, final_action: bool) -> bool:
    """Remove rules that cannot fire or that only restate the default."""
    changed = False
    j = 0
    while j < len(rules):
        parts, action, _ = rules[j]
        if any(set(e[0]) <= set(parts) for e in rules[:j]) or (
            action == final_action
            and all(_disjoint(parts, k[0]) for k in rules[j + 1 :] if k[1] != action)
        ):
            del rules[j]
            changed = True
        else:
            j += 1
    return changed


def _prune_conjuncts(rules: list) -> bool:
    """Drop conjuncts already implied by having passed the earlier rules."""
    changed = False
    for j, (parts, _, _) in enumerate(rules):
        for c in list(parts):
            rest = {p for p in parts if p != c} | {negate(c)}
            if any(set(e[0]) <= rest for e in rules[:j]):
                parts.remove(c)
                changed = True
    return changed


def simplify_cascade(
    script: Script,
    domain: Optional[Mapping[str, Sequence]] = None,
    cap: int = DEFAULT_CAP,
    seed: int = 0,
) -> Script:
    """Drop conjuncts and rules made redundant by first-match ordering.

    * A conjunct ``c`` of rule j is dropped when some earlier rule i has all
      of its conjuncts among rule j's other conjuncts plus ``not c``: any
      record reaching rule j already has ``c``.
    * A rule is dropped when an earlier rule's conjuncts are a subset of its
      own (it can never fire).
    * A rule whose action equals the default is dropped when every later
      rule with the other action is syntactically disjoint from it.

    Equivalence holds for records with every annotation present; the result
    is checked against the input with ``equivalence_oracle`` and
    ``SimplificationUnsound`` is raised on divergence.
    """
    rules = [[_dedupe(list(conjuncts(s.predicate))), s.action, s] for s in script.statements]
    for r in rules:
        r[0] = [c for c in r[0] if c != Const(True)]
    final_action = script.final_action

    changed = True
    while changed:
        changed = _strip_negated_rules(rules)
        changed |= _drop_rules(rules, final_action)
        changed |= _prune_conjuncts(rules)
        for j, r in enumerate(rules):
            if not r[0]:
                # always fires once reached, so it becomes the default
                final_action = r[1]
                del rules[j:]
                changed = True
                break

    result = _build_script(script.constants, [(p, a, old) for p, a, old in rules], final_action)
    if domain is None:
        domain = derive_domain(script)
    verdict = equivalence_oracle(script, result, domain, cap=cap, sample_seed=seed)
    if not verdict.equal:
        raise SimplificationUnsound(verdict.counterexample)
    return result


# -- equivalence oracle ------------------------------------------------------


OTHER_TEXT = "<other>"


def _atoms(expr, constants):
    """Yield (variable, constant-or-None, kind-hint) triples from ``expr``."""
    if isinstance(expr, (And, Or)):
        for c in expr.children:
            yield from _atoms(c, constants)
    elif isinstance(expr, Not):
        yield from _atoms(expr.child, constants)
    elif isinstance(expr, Var):
        yield expr.name, True, "boolean"
    elif isinstance(expr, Compare):
        for left, right in zip(expr.operands, expr.operands[1:]):
            for a, b in ((left, right), (right, left)):
                if isinstance(a, Var):
                    if isinstance(b, Const):
                        yield a.name, b.value, None
                    else:
                        yield a.name, None, None
    elif isinstance(expr, Membership):
        literal = expr.set
        if isinstance(literal, SetRef):
            literal = constants[literal.name]
        if isinstance(expr.operand, Var):
            if not literal.items:
                yield expr.operand.name, None, None
            for item in literal.items:
                yield expr.operand.name, item.value, None


def _conditions(artifact):
    if isinstance(artifact, Script):
        return [s.predicate for s in artifact.statements], artifact.constants
    tree = _as_tree(artifact)
    conds = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Branch):
            conds.append(node.condition)
            stack.extend((node.then, node.otherwise))
    return conds, tree.constants


def _kind_of(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    return "text"


def _bracket(values: list) -> tuple:
    cs = sorted(set(values))
    spread = (cs[-1] - cs[0]) / 2 if len(cs) > 1 else (abs(cs[0]) / 2 or 0.5)
    if all(isinstance(c, int) for c in cs) and float(spread).is_integer():
        spread = int(spread)
    reps = [cs[0] - spread]
    for a, b in zip(cs, cs[1:]):
        reps.append(a)
        reps.append((a + b) / 2)
    reps.append(cs[-1])
    reps.append(cs[-1] + spread)
    return tuple(reps)


def derive_domain(*artifacts) -> dict[str, tuple]:
    """Boundary-bracketing test values for every annotation the artifacts read.

    Numbers get each compared constant plus a value strictly between and
    beyond neighbouring constants, text gets its constants plus one value
    matching none of them, booleans get both values.
    """
    seen: dict[str, list] = {}
    kinds: dict[str, set] = {}
    for artifact in artifacts:
        conds, constants = _conditions(artifact)
        for cond in conds:
            for name, value, hint in _atoms(cond, constants):
                seen.setdefault(name, [])
                kinds.setdefault(name, set())
                if hint:
                    kinds[name].add(hint)
                elif value is not None:
                    kinds[name].add(_kind_of(value))
                    seen[name].append(value)
    domain = {}
    for name in sorted(seen):
        kind = kinds[name]
        if len(kind) > 1:
            raise ValueError(f"annotation {name!r} is compared with values of kinds {sorted(kind)}")
        kind = next(iter(kind), "number")
        values = seen[name]
        if kind == "boolean":
            domain[name] = (False, True)
        elif kind == "text":
            other = OTHER_TEXT
            while other in values:
                other += "_"
            domain[name] = tuple(sorted(set(values))) + (other,)
        elif values:
            domain[name] = _bracket(values)
        else:
            domain[name] = (-1, 0, 1)
    return domain


class _Evaluator:
    """Decides an artifact's outcome for a point under first-match semantics."""

    def __init__(self, artifact):
        if isinstance(artifact, Script):
            self.preds = [compile_predicate(s.predicate, artifact.constants) for s in artifact.statements]
            self.actions = [s.action for s in artifact.statements]
            self.final = artifact.final_action
            self.tree = None
        else:
            tree = _as_tree(artifact)
            self.tree = self._compile_node(tree.root, tree.constants)

    def _compile_node(self, node, constants):
        if isinstance(node, Leaf):
            return node.action
        return (
            compile_predicate(node.condition, constants),
            self._compile_node(node.then, constants),
            self._compile_node(node.otherwise, constants),
        )

    def __call__(self, entries) -> bool:
        if self.tree is not None:
            node = self.tree
            while not isinstance(node, bool):
                pred, then, otherwise = node
                node = then if pred(entries) is TriState.TRUE else otherwise
            return node
        for pred, action in zip(self.preds, self.actions):
            if pred(entries) is TriState.TRUE:
                return action
        return self.final


def artifact_variables(artifact) -> set[str]:
    conds, constants = _conditions(artifact)
    return {name for cond in conds for name, _, _ in _atoms(cond, constants)}


@dataclass(frozen=True)
class OracleResult:
    equal: bool
    counterexample: Optional[dict]
    points_checked: int
    exhaustive: bool = True

    def __bool__(self) -> bool:
        return self.equal


def equivalence_oracle(
    a,
    b,
    domain: Mapping[str, Sequence],
    cap: int = DEFAULT_CAP,
    sample_seed: Optional[int] = None,
) -> OracleResult:
    """Compare two trees or scripts on every point of ``domain``'s grid.

    When the grid exceeds ``cap`` points, ``DomainTooLarge`` is raised unless
    ``sample_seed`` is given, in which case ``cap`` grid points drawn with
    that seed are checked instead.  ``MISSING`` in a value list means the
    annotation is absent from the point.
    """
    needed = artifact_variables(a) | artifact_variables(b)
    missing = sorted(needed - set(domain))
    if missing:
        raise IncompleteDomain(missing)
    names = sorted(domain)
    axes = [tuple(domain[n]) for n in names]
    size = math.prod(len(ax) for ax in axes)

    eval_a, eval_b = _Evaluator(a), _Evaluator(b)
    exhaustive = size <= cap
    if exhaustive:
        points = itertools.product(*axes)
    elif sample_seed is None:
        raise DomainTooLarge(size, cap)
    else:
        rng = random.Random(sample_seed)
        points = (tuple(rng.choice(ax) for ax in axes) for _ in range(cap))

    checked = 0
    for point in points:
        entries = {n: v for n, v in zip(names, point) if v is not MISSING}
        checked += 1
        if eval_a(entries) != eval_b(entries):
            return OracleResult(False, entries, checked, exhaustive)
    return OracleResult(True, None, checked, exhaustive)
