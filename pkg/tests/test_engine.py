import itertools
import json
import pickle
import random

import pytest

from cascade_verify.dsl import (
    And,
    Compare,
    Const,
    Membership,
    Not,
    Or,
    Script,
    SetLiteral,
    Statement,
    Var,
    parse_predicate,
    parse_script,
)
from cascade_verify.engine import (
    DEFAULT,
    CascadeEngine,
    TriState,
    WaterfallStats,
    eval_predicate,
    format_outcomes,
    format_stats,
    format_trace_table,
    run_batch,
    run_record,
    trace_query,
    tri_and,
    tri_not,
    tri_or,
)
from cascade_verify.errors import RecordNotFound, TypeMismatch
from cascade_verify.records import MISSING, Record, load_records

from conftest import DATA, corpus_script
from naive import naive_decide

T, F, U = TriState.TRUE, TriState.FALSE, TriState.UNKNOWN


def ev(text, **entries):
    return eval_predicate(parse_predicate(text), entries)


def test_kleene_tables():
    for a, b in itertools.product((T, F, U), repeat=2):
        expected_and = F if F in (a, b) else (U if U in (a, b) else T)
        expected_or = T if T in (a, b) else (U if U in (a, b) else F)
        assert tri_and(a, b) is expected_and
        assert tri_or(a, b) is expected_or
    assert [tri_not(x) for x in (T, F, U)] == [F, T, U]


def test_compiled_connectives_follow_kleene():
    values = {"t": True, "f": False}
    for x, y in itertools.product(("t", "f", "u"), repeat=2):
        entries = {k: v for k, v in (("x", values.get(x)), ("y", values.get(y))) if v is not None}
        tx = {"t": T, "f": F, "u": U}[x]
        ty = {"t": T, "f": F, "u": U}[y]
        assert eval_predicate(parse_predicate("x and y"), entries) is tri_and(tx, ty)
        assert eval_predicate(parse_predicate("x or y"), entries) is tri_or(tx, ty)
        assert eval_predicate(parse_predicate("x and y and x"), entries) is tri_and(tx, ty)


@pytest.mark.parametrize(
    "text, entries, expected",
    [
        ("gnomAD_AF > 0.01", {"gnomAD_AF": 0.00001}, F),
        ("(0 < QD < 4)", {"QD": 4.2}, F),
        ("(0 < QD < 4)", {"QD": 3}, T),
        ("pLI > 0.9 and X == 1", {"X": 1}, U),
        ("pLI > 0.9 and X == 1", {"X": 2}, F),
        ("pLI > 0.9 or X == 1", {"X": 1}, T),
        ("not pLI > 0.9", {}, U),
        ('g in {"a", "b"}', {"g": "b"}, T),
        ('g not in {"a", "b"}', {"g": "b"}, F),
        ('g not in {"a"}', {}, U),
        ("n in {1, 2.5}", {"n": 1.0}, T),
        ("n in {1, 2.5}", {"n": 2.5}, T),
        ("x in {}", {"x": "q"}, F),
        ("flag", {"flag": True}, T),
        ("flag == False", {"flag": False}, T),
        ("1 < n", {"n": 2}, T),
        ("a < b", {"a": 1, "b": 2.5}, T),
        ("a < b", {"a": 1}, U),
        ("True", {}, T),
    ],
)
def test_predicate_examples(text, entries, expected):
    assert eval_predicate(parse_predicate(text), entries) is expected


@pytest.mark.parametrize(
    "text, entries",
    [
        ("x > 1", {"x": "high"}),
        ('x == "a"', {"x": 3}),
        ("x < True", {"x": True}),
        ("flag", {"flag": 1}),
        ("x in {1, 2}", {"x": True}),
        ('x in {"a"}', {"x": 1}),
        ("a < b", {"a": 1, "b": "z"}),
    ],
)
def test_type_mismatch(text, entries):
    with pytest.raises(TypeMismatch):
        eval_predicate(parse_predicate(text), entries)
    assert eval_predicate(parse_predicate(text), entries, lenient=True) is U


def test_short_circuit_skips_mismatch():
    # the right side would mismatch but is never reached
    assert ev('x > 1 and y == "a"', x=0, y=5) is F


def test_bool_is_not_one():
    assert ev("x in {1}", x=1) is T
    with pytest.raises(TypeMismatch):
        ev("x == 1", x=True)


def test_pathogenicity_examples():
    script = corpus_script("pathogenicity")
    common = run_record(script, Record("a", {"gnomAD_AF": 0.02}))
    assert (common.outcome, common.decided_by, len(common.steps)) == (False, 0, 1)
    lof = run_record(script, Record("b", {"gnomAD_AF": 0.001, "Most_Severe_Consequence": "stop_gained", "pLI": 0.95}))
    assert (lof.outcome, lof.decided_by, len(lof.steps)) == (True, 1, 2)
    assert [s.result for s in lof.steps] == [F, T]
    none = run_record(script, Record("c", {
        "gnomAD_AF": 0.001, "Most_Severe_Consequence": "missense_variant", "pLI": 0.1,
        "ClinVar_Status": "VUS", "REVEL_score": 0.2,
    }))
    assert (none.outcome, none.decided_by, len(none.steps)) == (False, DEFAULT, 4)


def test_trace_records_values():
    script = corpus_script("pathogenicity")
    trace = run_record(script, Record("r", {"gnomAD_AF": 0.001}))
    assert trace.steps[1].variables == {"Most_Severe_Consequence": MISSING, "pLI": MISSING}
    data = json.loads(trace.to_json())
    assert data["steps"][1]["variables"] == {"Most_Severe_Consequence": None, "pLI": None}
    assert data["steps"][1]["result"] == "Unknown"
    assert data["decided_by"] == DEFAULT


def test_waterfall_small():
    script = parse_script("if x > 1:\n    return True\nreturn False\n")
    recs = [Record("a", {"x": 2}), Record("b", {"x": 0}), Record("c", {})]
    result = run_batch(script, recs)
    step = result.stats.steps[0]
    assert (step.evaluated, step.matched, step.passed, step.unknown) == (3, 1, 1, 1)
    assert result.stats.default_count == 2
    assert result.caught_at(0) == ["a"] and result.caught_at(DEFAULT) == ["b", "c"]


def test_zero_records():
    result = run_batch(corpus_script("pathogenicity"), [])
    assert all(s.evaluated == s.matched == 0 for s in result.stats.steps)
    assert result.stats.total == 0


def test_empty_pipeline_batch():
    result = run_batch(parse_script("return True\n"), [Record(str(i), {}) for i in range(5)])
    assert result.stats.default_count == 5 and result.stats.accepted_total == 5
    assert {o.outcome for o in result.outcomes} == {True}


def test_strict_mismatch_has_context():
    script = parse_script("if x > 1:\n    return True\nreturn False\n")
    with pytest.raises(TypeMismatch) as info:
        run_batch(script, [Record("ok", {"x": 0}), Record("bad", {"x": "z"})])
    assert info.value.record_id == "bad" and info.value.step_index == 0


def test_lenient_counts_mismatches():
    script = parse_script("if x > 1:\n    return True\nreturn False\n")
    result = run_batch(script, [Record("a", {"x": "z"}), Record("b", {"x": 5})], lenient=True)
    assert result.stats.mismatches == 1
    assert result.stats.steps[0].unknown == 1
    assert "TYPE_MISMATCHES\t\t\t1" in format_stats(result.stats, script, lenient=True)


def test_stats_merge_is_associative():
    script = corpus_script("pathogenicity")
    recs = [Record(str(i), {"gnomAD_AF": i / 100, "REVEL_score": (i % 10) / 10}) for i in range(30)]
    parts = [run_batch(script, recs[i : i + 7]).stats for i in range(0, 30, 7)]
    left = WaterfallStats.empty(4)
    for p in parts:
        left = left.merge(p)
    right = WaterfallStats.empty(4)
    for p in reversed(parts):
        right = p.merge(right)
    assert left == right == run_batch(script, recs).stats


def test_trace_query():
    script = corpus_script("pathogenicity")
    recs = [Record("x", {"gnomAD_AF": 0.5}), Record("y", {})]
    assert trace_query(script, recs, "y").decided_by == DEFAULT
    with pytest.raises(RecordNotFound):
        trace_query(script, recs, "nope")


def test_demo_trace_record():
    script = corpus_script("red_button")
    with open(DATA / "demo_trace_record.jsonl", "rb") as fh:
        (record,) = list(load_records(fh))
    trace = run_record(script, record)
    assert len(trace.steps) == 14
    assert [s.result for s in trace.steps[:13]] == [F] * 13
    assert trace.steps[13].fired and trace.outcome is True and trace.decided_by == 13
    table = format_trace_table(trace, script)
    rows = table.splitlines()[2:]
    assert len(rows) == 14
    assert all(r.endswith("False → Skip") for r in rows[:13])
    assert rows[13].endswith("True → Selected")


def test_default_row_in_table():
    script = corpus_script("pathogenicity")
    trace = run_record(script, Record("d", {"gnomAD_AF": 0.001, "REVEL_score": 0.1}))
    assert format_trace_table(trace, script).splitlines()[-1].startswith("DEFAULT")


def test_outcomes_format():
    script = corpus_script("pathogenicity")
    result = run_batch(script, [Record("a", {"gnomAD_AF": 0.5}), Record("b", {})])
    assert format_outcomes(result.outcomes) == "a\tFalse\t0\nb\tFalse\tDEFAULT\n"


def test_stats_table_shape():
    script = corpus_script("pathogenicity")
    rows = format_stats(run_batch(script, []).stats, script).splitlines()
    assert rows[0] == "step_index\tlabel\tevaluated\tmatched\tpassed\tunknown"
    assert [r.split("\t")[0] for r in rows[1:]] == ["0", "1", "2", "3", "DEFAULT", "ACCEPTED", "REJECTED"]


def test_errors_pickle():
    exc = TypeMismatch("x", "number", "text", 3, "r1")
    assert str(pickle.loads(pickle.dumps(exc))) == str(exc)


# -- first-match fuzz against an independent evaluator -------------------------

NUMERIC = ("a", "b", "c")


def random_atom(rng):
    kind = rng.random()
    if kind < 0.45:
        name = rng.choice(NUMERIC)
        if rng.random() < 0.25:
            lo = rng.randint(-2, 2)
            return Compare((Const(lo), Var(name), Const(lo + rng.randint(0, 3))), (rng.choice("<>"), "<="))
        return Compare((Var(name), Const(rng.choice([rng.randint(-3, 3), rng.uniform(-3, 3)]))),
                       (rng.choice(("<", ">", "<=", ">=", "==", "!=")),))
    if kind < 0.7:
        items = tuple(Const(x) for x in rng.sample(["p", "q", "r", "s"], rng.randint(0, 3)))
        return Membership(Var("t"), SetLiteral(items), rng.random() < 0.3)
    if kind < 0.85:
        return Var("f")
    return Compare((Var(rng.choice(NUMERIC)), Var(rng.choice(NUMERIC))), (rng.choice(("<", "==", ">=")),))


def random_expr(rng, depth=0):
    if depth >= 2 or rng.random() < 0.4:
        return random_atom(rng)
    k = rng.random()
    if k < 0.2:
        return Not(random_expr(rng, depth + 1))
    children = tuple(random_expr(rng, depth + 1) for _ in range(rng.randint(2, 3)))
    return And(children) if k < 0.6 else Or(children)


def random_script(rng):
    n = rng.randint(0, 6)
    stmts = tuple(Statement(i, "", (), random_expr(rng), rng.random() < 0.5) for i in range(n))
    return Script({}, stmts, rng.random() < 0.5)


def random_entries(rng):
    entries = {}
    for name in NUMERIC:
        if rng.random() < 0.8:
            entries[name] = rng.choice([rng.randint(-3, 3), round(rng.uniform(-3, 3), 1)])
    if rng.random() < 0.8:
        entries["t"] = rng.choice("pqrsz")
    if rng.random() < 0.8:
        entries["f"] = rng.random() < 0.5
    return entries


def fuzz_first_match(pairs: int, seed: int = 2024) -> int:
    """Number of (script, record) pairs where engine and naive evaluator disagree."""
    rng = random.Random(seed)
    disagreements = 0
    for _ in range(pairs):
        script = random_script(rng)
        entries = random_entries(rng)
        trace = CascadeEngine(script).trace(Record("r", entries))
        if (trace.outcome, trace.decided_by) != naive_decide(script, entries):
            disagreements += 1
    return disagreements


def test_first_match_fuzz_small():
    assert fuzz_first_match(2000, seed=7) == 0
