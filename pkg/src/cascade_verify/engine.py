"""First-match execution of cascade scripts over records.

Predicates are compiled once into closures over a record's entry mapping.
Missing annotations follow Kleene three-valued logic and a statement fires
only when its predicate is definitely true.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import operator
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .dsl import (
    And,
    Compare,
    Const,
    Membership,
    MetaPredicate,
    Not,
    Or,
    Script,
    SetLiteral,
    SetRef,
    Var,
    ordered_variables,
    render_expr,
)
from .errors import RecordNotFound, TypeMismatch
from .records import MISSING, Record, value_kind

DEFAULT = "DEFAULT"


class TriState(enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


T = TriState.TRUE
F = TriState.FALSE
U = TriState.UNKNOWN

_NOT = {T: F, F: T, U: U}


def tri_not(x: TriState) -> TriState:
    return _NOT[x]


def tri_and(*values: TriState) -> TriState:
    result = T
    for v in values:
        if v is F:
            return F
        if v is U:
            result = U
    return result


def tri_or(*values: TriState) -> TriState:
    result = F
    for v in values:
        if v is T:
            return T
        if v is U:
            result = U
    return result


_OPS = {
    "<": operator.lt,
    ">": operator.gt,
    "<=": operator.le,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}
_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}
_EQUALITY = ("==", "!=")


def _kind(value) -> str:
    t = type(value)
    if t is int or t is float:
        return "number"
    if t is str:
        return "text"
    if t is bool:
        return "boolean"
    return t.__name__


class MismatchCounter:
    def __init__(self):
        self.count = 0


Predicate = Callable[[Mapping], TriState]


class _Compiler:
    def __init__(self, constants: Mapping[str, SetLiteral], lenient: bool, counter: MismatchCounter):
        self.constants = constants
        self.lenient = lenient
        self.counter = counter

    def mismatch(self, annotation: str, expected: str, found) -> TriState:
        if self.lenient:
            self.counter.count += 1
            return U
        raise TypeMismatch(annotation, expected, value_kind(found))

    def compile(self, node) -> Predicate:
        if isinstance(node, Or):
            return self._or([self.compile(c) for c in node.children])
        if isinstance(node, And):
            return self._and([self.compile(c) for c in node.children])
        if isinstance(node, Not):
            child = self.compile(node.child)
            return lambda e: _NOT[child(e)]
        if isinstance(node, Compare):
            pairs = [
                self._pair(node.operands[i], op, node.operands[i + 1])
                for i, op in enumerate(node.ops)
            ]
            return pairs[0] if len(pairs) == 1 else self._and(pairs)
        if isinstance(node, Membership):
            return self._membership(node)
        if isinstance(node, Var):
            return self._bare_var(node.name)
        if isinstance(node, Const):
            if not isinstance(node.value, bool):
                raise TypeError(f"constant {node.value!r} used as a condition")
            result = T if node.value else F
            return lambda e: result
        raise TypeError(f"cannot compile {node!r}")

    @staticmethod
    def _and(children: list[Predicate]) -> Predicate:
        if len(children) == 2:
            a, b = children

            def and2(e):
                x = a(e)
                if x is F:
                    return F
                y = b(e)
                if y is F:
                    return F
                return U if (x is U or y is U) else T

            return and2

        def and_n(e):
            result = T
            for c in children:
                r = c(e)
                if r is F:
                    return F
                if r is U:
                    result = U
            return result

        return and_n

    @staticmethod
    def _or(children: list[Predicate]) -> Predicate:
        def or_n(e):
            result = F
            for c in children:
                r = c(e)
                if r is T:
                    return T
                if r is U:
                    result = U
            return result

        return or_n

    def _bare_var(self, name: str) -> Predicate:
        mismatch = self.mismatch

        def bare(e):
            v = e.get(name)
            if v is None:
                return U
            if type(v) is bool:
                return T if v else F
            return mismatch(name, "boolean", v)

        return bare

    def _pair(self, left, op: str, right) -> Predicate:
        if isinstance(left, Const) and isinstance(right, Var):
            left, op, right = right, _FLIP[op], left
        fn = _OPS[op]
        mismatch = self.mismatch

        if isinstance(left, Var) and isinstance(right, Const):
            name, c = left.name, right.value
            kind = _kind(c)
            if kind == "number":

                def cmp_number(e):
                    v = e.get(name)
                    if v is None:
                        return U
                    t = type(v)
                    if t is float or t is int:
                        return T if fn(v, c) else F
                    return mismatch(name, "number", v)

                return cmp_number
            if kind == "text":

                def cmp_text(e):
                    v = e.get(name)
                    if v is None:
                        return U
                    if type(v) is str:
                        return T if fn(v, c) else F
                    return mismatch(name, "text", v)

                return cmp_text
            ordering = op not in _EQUALITY

            def cmp_bool(e):
                v = e.get(name)
                if v is None:
                    return U
                if type(v) is bool and not ordering:
                    return T if fn(v, c) else F
                return mismatch(name, "boolean compared with == or !=", v)

            return cmp_bool

        get_l = self._getter(left)
        get_r = self._getter(right)
        label = left.name if isinstance(left, Var) else (right.name if isinstance(right, Var) else "constant")

        def cmp_generic(e):
            a = get_l(e)
            b = get_r(e)
            if a is None or b is None:
                return U
            ka, kb = _kind(a), _kind(b)
            if ka != kb:
                return mismatch(label, ka, b)
            if ka == "boolean" and op not in _EQUALITY:
                return mismatch(label, "boolean compared with == or !=", b)
            return T if fn(a, b) else F

        return cmp_generic

    @staticmethod
    def _getter(operand):
        if isinstance(operand, Var):
            name = operand.name
            return lambda e: e.get(name)
        value = operand.value
        return lambda e: value

    def _membership(self, node: Membership) -> Predicate:
        literal = node.set
        if isinstance(literal, SetRef):
            literal = self.constants[literal.name]
        by_kind: dict[str, set] = {}
        for item in literal.items:
            by_kind.setdefault(_kind(item.value), set()).add(item.value)
        sets = {k: frozenset(v) for k, v in by_kind.items()}
        empty = not sets
        negated = node.negated
        hit, miss = (F, T) if negated else (T, F)
        get = self._getter(node.operand)
        label = node.operand.name if isinstance(node.operand, Var) else "constant"
        mismatch = self.mismatch
        expected = " or ".join(sorted(sets)) or "any"

        if len(sets) == 1 and "text" in sets and isinstance(node.operand, Var):
            members = sets["text"]
            name = node.operand.name

            def member_text(e):
                v = e.get(name)
                if v is None:
                    return U
                if type(v) is str:
                    return hit if v in members else miss
                return mismatch(name, "text", v)

            return member_text

        def member(e):
            v = get(e)
            if v is None:
                return U
            if empty:
                return miss
            members = sets.get(_kind(v))
            if members is None:
                return mismatch(label, expected, v)
            return hit if v in members else miss

        return member


def compile_predicate(
    predicate,
    constants: Optional[Mapping[str, SetLiteral]] = None,
    lenient: bool = False,
    counter: Optional[MismatchCounter] = None,
) -> Predicate:
    return _Compiler(constants or {}, lenient, counter or MismatchCounter()).compile(predicate)


def eval_predicate(predicate, record: Union[Record, Mapping], constants=None, lenient: bool = False) -> TriState:
    """Evaluate one predicate against a record under three-valued logic."""
    entries = record.entries if isinstance(record, Record) else record
    return compile_predicate(predicate, constants, lenient)(entries)


# -- traces and statistics ---------------------------------------------------


@dataclass(frozen=True)
class StepTrace:
    step_index: int
    label: str
    meta_predicates: tuple[MetaPredicate, ...]
    result: TriState
    fired: bool
    variables: Mapping[str, object]
    action_if_fired: Optional[bool]

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "label": self.label,
            "meta_predicates": [
                {"dimension": m.dimension.value, "value": m.value} for m in self.meta_predicates
            ],
            "result": self.result.value,
            "fired": self.fired,
            "variables": {k: (None if v is MISSING else v) for k, v in self.variables.items()},
            "action_if_fired": self.action_if_fired,
        }


@dataclass(frozen=True)
class Trace:
    record_id: str
    steps: tuple[StepTrace, ...]
    outcome: bool
    decided_by: Union[int, str]

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "steps": [s.to_dict() for s in self.steps],
            "outcome": self.outcome,
            "decided_by": self.decided_by,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


@dataclass
class StepStats:
    evaluated: int = 0
    matched: int = 0
    passed: int = 0
    unknown: int = 0


@dataclass
class WaterfallStats:
    steps: list[StepStats]
    default_count: int = 0
    accepted_total: int = 0
    rejected_total: int = 0
    mismatches: int = 0
    skipped: int = 0

    @classmethod
    def empty(cls, n_steps: int) -> "WaterfallStats":
        return cls([StepStats() for _ in range(n_steps)])

    @property
    def total(self) -> int:
        return self.accepted_total + self.rejected_total

    def merge(self, other: "WaterfallStats") -> "WaterfallStats":
        """Count-wise sum; associative and commutative."""
        if len(self.steps) != len(other.steps):
            raise ValueError("cannot merge statistics of different scripts")
        return WaterfallStats(
            [
                StepStats(a.evaluated + b.evaluated, a.matched + b.matched, a.passed + b.passed, a.unknown + b.unknown)
                for a, b in zip(self.steps, other.steps)
            ],
            self.default_count + other.default_count,
            self.accepted_total + other.accepted_total,
            self.rejected_total + other.rejected_total,
            self.mismatches + other.mismatches,
            self.skipped + other.skipped,
        )


@dataclass(frozen=True)
class Outcome:
    record_id: str
    outcome: bool
    decided_by: Union[int, str]


@dataclass
class BatchResult:
    outcomes: list[Outcome]
    stats: WaterfallStats

    def caught_at(self, step: Union[int, str]) -> list[str]:
        """Ids of the records decided by ``step`` (an index or ``DEFAULT``)."""
        return [o.record_id for o in self.outcomes if o.decided_by == step]


class CascadeEngine:
    """A script compiled for repeated evaluation."""

    def __init__(self, script: Script, lenient: bool = False):
        self.script = script
        self.lenient = lenient
        self.counter = MismatchCounter()
        compiler = _Compiler(script.constants, lenient, self.counter)
        self.predicates = [compiler.compile(s.predicate) for s in script.statements]
        self.actions = [s.action for s in script.statements]
        self.variables = [ordered_variables(s.predicate) for s in script.statements]

    def trace(self, record: Record) -> Trace:
        entries = record.entries
        steps = []
        for i, stmt in enumerate(self.script.statements):
            result = self._eval(i, entries, record.record_id)
            fired = result is T
            values = {}
            for name in self.variables[i]:
                v = entries.get(name)
                values[name] = MISSING if v is None else v
            steps.append(
                StepTrace(i, stmt.label, stmt.meta_predicates, result, fired, values, stmt.action)
            )
            if fired:
                return Trace(record.record_id, tuple(steps), stmt.action, i)
        return Trace(record.record_id, tuple(steps), self.script.final_action, DEFAULT)

    def _eval(self, i: int, entries, record_id: str) -> TriState:
        try:
            return self.predicates[i](entries)
        except TypeMismatch as exc:
            raise exc.with_context(i, record_id) from None

    def run(self, records: Iterable[Record], keep_outcomes: bool = True) -> BatchResult:
        n = len(self.predicates)
        preds = self.predicates
        actions = self.actions
        final = self.script.final_action
        evaluated = [0] * n
        matched = [0] * n
        unknown = [0] * n
        default_count = accepted = rejected = 0
        outcomes: list[Outcome] = []
        start_mismatches = self.counter.count

        for record in records:
            entries = record.entries
            decided: Union[int, str] = DEFAULT
            i = -1
            try:
                for i in range(n):
                    evaluated[i] += 1
                    r = preds[i](entries)
                    if r is T:
                        matched[i] += 1
                        decided = i
                        break
                    if r is U:
                        unknown[i] += 1
            except TypeMismatch as exc:
                raise exc.with_context(i, record.record_id) from None
            if decided == DEFAULT:
                default_count += 1
                outcome = final
            else:
                outcome = actions[decided]
            if outcome:
                accepted += 1
            else:
                rejected += 1
            if keep_outcomes:
                outcomes.append(Outcome(record.record_id, outcome, decided))

        stats = WaterfallStats(
            [
                StepStats(evaluated[i], matched[i], evaluated[i] - matched[i] - unknown[i], unknown[i])
                for i in range(n)
            ],
            default_count,
            accepted,
            rejected,
            self.counter.count - start_mismatches,
        )
        return BatchResult(outcomes, stats)


def run_record(script: Script, record: Record, lenient: bool = False) -> Trace:
    return CascadeEngine(script, lenient).trace(record)


def run_batch(script: Script, records: Iterable[Record], lenient: bool = False) -> BatchResult:
    return CascadeEngine(script, lenient).run(records)


def trace_query(script: Script, records: Iterable[Record], record_id: str, lenient: bool = False) -> Trace:
    """Trace the first record in ``records`` whose id is ``record_id``."""
    engine = CascadeEngine(script, lenient)
    for record in records:
        if record.record_id == record_id:
            return engine.trace(record)
    raise RecordNotFound(record_id)


# -- output formats ----------------------------------------------------------

STATS_HEADER = ("step_index", "label", "evaluated", "matched", "passed", "unknown")


def _tsv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def format_outcomes(outcomes: Iterable[Outcome]) -> str:
    """Tab-separated ``record_id, outcome, decided_by`` lines, no header."""
    return _tsv((o.record_id, o.outcome, o.decided_by) for o in outcomes)


def step_label(script: Script, index: int) -> str:
    stmt = script.statements[index]
    return stmt.label or render_expr(stmt.predicate)


def format_stats(stats: WaterfallStats, script: Script, lenient: bool = False) -> str:
    rows = [STATS_HEADER]
    for i, s in enumerate(stats.steps):
        rows.append((i, step_label(script, i), s.evaluated, s.matched, s.passed, s.unknown))
    rows.append((DEFAULT, f"return {script.final_action}", stats.default_count, stats.default_count, 0, 0))
    rows.append(("ACCEPTED", "", stats.total, stats.accepted_total, "", ""))
    rows.append(("REJECTED", "", stats.total, stats.rejected_total, "", ""))
    if lenient:
        rows.append(("TYPE_MISMATCHES", "", "", stats.mismatches, "", ""))
        rows.append(("SKIPPED_RECORDS", "", "", stats.skipped, "", ""))
    return _tsv(rows)


def _pretty(text: str) -> str:
    text = text.replace("_", " ")
    return text[:1].upper() + text[1:]


def _meta_summary(metas: tuple[MetaPredicate, ...]) -> tuple[str, str, str]:
    def values(dim: str) -> str:
        return ", ".join(m.raw.strip("\"'") for m in metas if m.dimension.value == dim)

    purpose, domain = _pretty(values("purpose")), values("knowledge_domain")
    kind = " / ".join(x for x in (purpose, domain) if x)
    return kind, _pretty(values("scale")), values("method")


def format_trace_table(trace: Trace, script: Script) -> str:
    """Human table with one row per evaluated step plus a DEFAULT row when no rule fired."""
    header = ("Step", "Test", "Purpose / Knowledge Domain", "Scale", "Method", "Action", "Evaluated to")
    rows = []
    for step in trace.steps:
        action = "Select" if step.action_if_fired else "Reject"
        if step.fired:
            evaluated = "True → " + ("Selected" if step.action_if_fired else "Rejected")
        else:
            evaluated = f"{step.result} → Skip"
        kind, scale, method = _meta_summary(step.meta_predicates)
        rows.append((str(step.step_index + 1), step_label(script, step.step_index), kind, scale, method, action, evaluated))
    if trace.decided_by == DEFAULT:
        final = script.final_action
        rows.append(
            (DEFAULT, "No rule fired", "", "", "", "Select" if final else "Reject",
             "→ Selected" if final else "→ Rejected")
        )
    widths = [max(len(r[c]) for r in [header, *rows]) for c in range(len(header))]
    lines = [f"Trace for {trace.record_id}"]
    for r in [header, *rows]:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"
