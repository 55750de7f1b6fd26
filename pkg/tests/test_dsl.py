import pytest
from hypothesis import HealthCheck, given, settings

from cascade_verify.dictionary import Dimension
from cascade_verify.dsl import (
    And,
    Compare,
    Const,
    Membership,
    Not,
    Or,
    SetRef,
    Var,
    extract_variables,
    parse_predicate,
    parse_script,
    render_script,
)
from cascade_verify.errors import (
    MissingFinalAction,
    ScriptSyntaxError,
    UndefinedSetRef,
    UnknownDirective,
)

from conftest import CORPUS, corpus_script, corpus_text
from strategies import scripts


def test_validation_listing_parses():
    script = corpus_script("validation_pass")
    assert len(script.statements) == 1
    stmt = script.statements[0]
    assert [m.dimension for m in stmt.meta_predicates] == [
        Dimension.PURPOSE, Dimension.KNOWLEDGE_DOMAIN, Dimension.SCALE, Dimension.SCALE,
    ]
    assert stmt.action is False and script.final_action is True
    assert stmt.predicate == Or((
        Compare((Const(0), Var("QD"), Const(4)), ("<", "<")),
        Membership(Var("Mostly_Expressed_In"), parse_predicate('x in {"brain"}').set, negated=True),
    ))


def test_empty_pipeline():
    script = parse_script("return False\n")
    assert script.statements == () and script.final_action is False
    assert render_script(script) == "return False\n"
    assert render_script(parse_script("return True")) == "return True\n"


def test_pathogenicity_cascade():
    script = corpus_script("pathogenicity")
    assert len(script.statements) == 4 and script.final_action is False
    assert script.statements[0].label == "Rule 1: Exclude common variants"
    assert script.statements[1].predicate.children[0] == Membership(Var("Most_Severe_Consequence"), SetRef("LOF_SET"))


@pytest.mark.parametrize(
    "text, names",
    [
        ('(0 < QD < 4) or Mostly_Expressed_In not in {"brain"}', {"QD", "Mostly_Expressed_In"}),
        ("pLI < 0.9", {"pLI"}),
        ("Most_Severe_Consequence in LOF_SET and pLI > 0.9", {"Most_Severe_Consequence", "pLI"}),
    ],
)
def test_extract_variables(text, names):
    assert extract_variables(parse_predicate(text, {"LOF_SET": parse_predicate("x in {1}").set})) == names


def test_precedence():
    expr = parse_predicate("a or b and not c")
    assert expr == Or((Var("a"), And((Var("b"), Not(Var("c"))))))
    assert parse_predicate("not a < 1") == Not(Compare((Var("a"), Const(1)), ("<",)))


def test_chained_comparison_kept_as_chain():
    expr = parse_predicate("0 < x <= 4.5")
    assert expr == Compare((Const(0), Var("x"), Const(4.5)), ("<", "<="))


@pytest.mark.parametrize(
    "source, error",
    [
        ("if x:\n    return True\n", MissingFinalAction),
        ("", MissingFinalAction),
        ('"""\n@colour(red)\n"""\nif x:\n    return True\nreturn False\n', UnknownDirective),
        ("if x in NOPE:\n    return True\nreturn False\n", UndefinedSetRef),
        ("if x <:\n    return True\nreturn False\n", ScriptSyntaxError),
        ("if (x:\n    return True\nreturn False\n", ScriptSyntaxError),
        ("return False\nreturn True\n", ScriptSyntaxError),
        ("if x:\n    return Maybe\nreturn False\n", ScriptSyntaxError),
        ("if x:\n    if y:\n        return True\nreturn False\n", ScriptSyntaxError),
        ("A = {1}\nA = {2}\nreturn False\n", ScriptSyntaxError),
        ('if x == "open:\n    return True\nreturn False\n', ScriptSyntaxError),
    ],
)
def test_syntax_errors(source, error):
    with pytest.raises(error) as info:
        parse_script(source)
    assert info.value.line >= 1


def test_error_position():
    with pytest.raises(ScriptSyntaxError) as info:
        parse_script("# ok\nif x <:\n    return True\nreturn False\n")
    assert info.value.line == 2


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.cascade")), ids=lambda p: p.stem)
def test_corpus_round_trip(path):
    script = parse_script(path.read_text())
    rendered = render_script(script)
    again = parse_script(rendered)
    assert again == script
    assert render_script(again) == rendered


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(scripts())
def test_round_trip_property(script):
    assert parse_script(render_script(script)) == script


def test_hash_is_stable():
    a = parse_script(corpus_text("red_button"))
    b = parse_script(corpus_text("red_button"))
    assert a.source_hash == b.source_hash and len(a.source_hash) == 64
    assert a.source_hash != corpus_script("call_quality").source_hash
