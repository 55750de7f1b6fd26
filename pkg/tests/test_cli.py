import json
import subprocess
import sys

import pytest

from cascade_verify.cli import main

from conftest import CORPUS, DATA

DICT = str(DATA / "sample_dictionary.yaml")
TREE = str(DATA / "pathogenicity_tree.json")
FIXTURE = str(DATA / "demo_trace_record.jsonl")


def script(name):
    return str(CORPUS / f"{name}.cascade")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def five_records(tmp_path):
    rows = [
        {"_id": "common", "gnomAD_AF": 0.2},
        {"_id": "lof", "gnomAD_AF": 0.001, "Most_Severe_Consequence": "stop_gained", "pLI": 0.95},
        {"_id": "clinvar", "gnomAD_AF": 0.001, "Most_Severe_Consequence": "frameshift_variant", "pLI": 0.1,
         "ClinVar_Status": "Pathogenic"},
        {"_id": "revel", "gnomAD_AF": 0.001, "Most_Severe_Consequence": "missense_variant", "REVEL_score": 0.9},
        {"_id": "none", "gnomAD_AF": 0.001, "Most_Severe_Consequence": "missense_variant", "pLI": 0.1,
         "ClinVar_Status": "VUS", "REVEL_score": 0.2},
    ]
    path = tmp_path / "five.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def test_validate_pass(capsys):
    code, out, _ = run(capsys, "validate", script("validation_pass"), "--dict", DICT)
    assert code == 0 and out.startswith("OK")


def test_validate_fail(capsys):
    code, out, _ = run(capsys, "validate", script("validation_fail"), "--dict", DICT)
    assert code == 1
    assert "Variables found: pLI (Population Genetics, gene)" in out


def test_validate_structured(capsys):
    code, out, _ = run(capsys, "validate", script("validation_fail"), "--dict", DICT, "--format", "structured")
    rows = [json.loads(x) for x in out.splitlines()]
    assert code == 1 and rows[-1]["summary"]["errors"] == 2


def test_validate_missing_dict(capsys, tmp_path):
    code, _, err = run(capsys, "validate", script("validation_pass"), "--dict", str(tmp_path / "nope.yaml"))
    assert code == 2 and "error" in err


def test_validate_syntax_error(capsys, tmp_path):
    bad = tmp_path / "bad.cascade"
    bad.write_text("if x <:\n    return True\nreturn False\n")
    assert run(capsys, "validate", str(bad), "--dict", DICT)[0] == 2


def test_run_five_records(capsys, tmp_path, five_records):
    out = tmp_path / "out.tsv"
    stats = tmp_path / "stats.tsv"
    code, _, _ = run(capsys, "run", script("pathogenicity"), "--dict", DICT, "--records", str(five_records),
                     "--out", str(out), "--stats", str(stats), "--no-validate")
    assert code == 0
    assert out.read_text().splitlines() == [
        "common\tFalse\t0", "lof\tTrue\t1", "clinvar\tTrue\t2", "revel\tTrue\t3", "none\tFalse\tDEFAULT",
    ]
    rows = stats.read_text().splitlines()
    assert [r.split("\t")[0] for r in rows[1:6]] == ["0", "1", "2", "3", "DEFAULT"]
    assert stats.with_suffix(".png").read_bytes().startswith(b"\x89PNG")


def test_run_refuses_invalid_script(capsys, tmp_path, five_records):
    out = tmp_path / "out.tsv"
    code, _, err = run(capsys, "run", script("validation_fail"), "--dict", DICT, "--records", str(five_records),
                       "--out", str(out))
    assert code == 1 and not out.exists()
    assert "refused" in err


def test_run_empty_file(capsys, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code, out, _ = run(capsys, "run", script("red_button"), "--dict", DICT, "--records", str(empty))
    assert code == 0
    for row in out.splitlines()[1:]:
        counts = [c for c in row.split("\t")[2:] if c]
        assert all(c == "0" for c in counts)


def test_run_strict_runtime_error(capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"_id":"x","gnomAD_AF":"high"}\n')
    code, _, err = run(capsys, "run", script("pathogenicity"), "--no-validate", "--records", str(bad))
    assert code == 3 and "type mismatch" in err
    code, out, _ = run(capsys, "run", script("pathogenicity"), "--no-validate", "--records", str(bad), "--lenient")
    assert code == 0 and "TYPE_MISMATCHES\t\t\t1" in out


def test_run_malformed_record(capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"_id":"x"}\n{oops\n')
    assert run(capsys, "run", script("pathogenicity"), "--no-validate", "--records", str(bad))[0] == 2
    code, out, _ = run(capsys, "run", script("pathogenicity"), "--no-validate", "--records", str(bad), "--lenient")
    assert code == 0 and "SKIPPED_RECORDS\t\t\t1" in out


def test_run_trace_all(capsys, tmp_path, five_records):
    out = tmp_path / "o.tsv"
    code, _, _ = run(capsys, "run", script("pathogenicity"), "--no-validate", "--records", str(five_records),
                     "--out", str(out), "--trace-all")
    assert code == 0
    traces = [json.loads(x) for x in (tmp_path / "o.tsv.traces.jsonl").read_text().splitlines()]
    assert [t["record_id"] for t in traces] == ["common", "lof", "clinvar", "revel", "none"]
    assert traces[4]["decided_by"] == "DEFAULT" and len(traces[4]["steps"]) == 4


def test_run_jobs_identical(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr("cascade_verify.pipeline.CHUNK_LINES", 256)
    records = tmp_path / "r.jsonl"
    assert run(capsys, "gen", "--dict", DICT, "--count", "3000", "--seed", "5", "--out", str(records))[0] == 0
    outputs = []
    for jobs in ("1", "3"):
        out, stats = tmp_path / f"o{jobs}.tsv", tmp_path / f"s{jobs}.tsv"
        code, _, _ = run(capsys, "run", script("red_button"), "--dict", DICT, "--records", str(records),
                         "--out", str(out), "--stats", str(stats), "--jobs", jobs)
        assert code == 0
        outputs.append((out.read_bytes(), stats.read_bytes(), stats.with_suffix(".png").read_bytes()))
    assert outputs[0] == outputs[1]


def test_trace_table(capsys):
    code, out, _ = run(capsys, "trace", script("red_button"), "chr1:228287879 C>T", "--dict", DICT, "--records", FIXTURE)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 16
    assert lines[-1].endswith("True → Selected") and lines[-1].startswith("14")


def test_trace_structured(capsys):
    code, out, _ = run(capsys, "trace", script("red_button"), "chr1:228287879 C>T", "--dict", DICT,
                       "--records", FIXTURE, "--format", "structured")
    data = json.loads(out)
    assert code == 0 and data["decided_by"] == 13 and data["outcome"] is True


def test_trace_unknown_id(capsys):
    code, _, err = run(capsys, "trace", script("red_button"), "nope", "--dict", DICT, "--records", FIXTURE)
    assert code == 2 and "not found" in err


def test_trace_default_row(capsys, five_records):
    code, out, _ = run(capsys, "trace", script("pathogenicity"), "none", "--no-validate", "--records", str(five_records))
    assert code == 0 and out.splitlines()[-1].startswith("DEFAULT")


def test_transform_simplify_check(capsys, tmp_path):
    out = tmp_path / "t.cascade"
    code, text, _ = run(capsys, "transform", TREE, "--simplify", "--check", "--out", str(out))
    assert code == 0
    assert text.splitlines()[0].startswith("equivalent")
    assert "1-decision list: no" in text
    body = out.read_text()
    assert body.count("if (") == 4 and body.rstrip().endswith("return False")


def test_transform_leaf(capsys, tmp_path):
    leaf = tmp_path / "leaf.json"
    leaf.write_text('{"return": true}')
    code, out, err = run(capsys, "transform", str(leaf), "--check")
    assert code == 0 and out == "return True\n"
    assert "equivalent" in err and "1-decision list: yes" in err


def test_transform_bad_tree(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"if": "x >"}')
    assert run(capsys, "transform", str(bad))[0] == 2


def test_check_dict(capsys, tmp_path):
    assert run(capsys, "check-dict", "--dict", DICT)[0] == 0
    dup = tmp_path / "dup.yaml"
    dup.write_text(
        "annotations:\n  pLI: {purpose: evidence, knowledge_domain: Population Genetics, scale: gene}\n"
        "  pLI: {purpose: evidence, knowledge_domain: Population Genetics, scale: gene}\n"
    )
    code, out, _ = run(capsys, "check-dict", "--dict", str(dup))
    assert code == 1 and "DuplicateAnnotation" in out
    assert run(capsys, "check-dict", "--dict", str(tmp_path / "missing.yaml"))[0] == 2
    schema = tmp_path / "schema.yaml"
    schema.write_text("annotations: 3\n")
    assert run(capsys, "check-dict", "--dict", str(schema))[0] == 2


def test_gen(capsys, tmp_path):
    a, b, z = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "z.jsonl"
    for p in (a, b):
        assert run(capsys, "gen", "--dict", DICT, "--count", "1000", "--seed", "42", "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1000
    run(capsys, "gen", "--dict", DICT, "--count", "0", "--seed", "1", "--out", str(z))
    assert z.read_text() == ""


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", script("pathogenicity"), "--no-validate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cascade_verify.cli", "validate", script("validation_pass"), "--dict", DICT],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("OK")
