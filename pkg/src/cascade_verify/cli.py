"""Command-line entry point: validate, run, trace, transform, check-dict, gen."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .dictionary import ClassificationDictionary, check_dictionary, load_dictionary, read_dictionary
from .dsl import Script, parse_script, render_script
from .engine import CascadeEngine, format_stats, format_trace_table
from .errors import (
    CascadeError,
    DictionaryError,
    DomainTooLarge,
    MalformedRecord,
    RecordNotFound,
    ScriptSyntaxError,
    SimplificationUnsound,
    TreeFormatError,
    TypeMismatch,
)
from .generate import write_records
from .pipeline import atomic_output, run_stream
from .records import load_records
from .tree import (
    derive_domain,
    equivalence_oracle,
    is_one_decision_list,
    load_tree,
    simplify_cascade,
    tree_to_cascade,
)
from .validator import render_report, validate_script

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_script(path: str) -> Script:
    return parse_script(_read_text(path))


def _load_dict(path: Optional[str]) -> ClassificationDictionary:
    if path is None:
        raise UsageError("--dict is required")
    return load_dictionary(_read_text(path))


def _gate(args, script: Script) -> Optional[int]:
    """Refuse to execute a script that fails validation, unless told not to check."""
    if args.no_validate:
        return None
    report = validate_script(script, _load_dict(args.dict))
    if report.valid:
        return None
    sys.stderr.write(render_report(report, args.format))
    sys.stderr.write("run refused: script failed validation (use --no-validate to override)\n")
    return EXIT_INVALID


def cmd_validate(args) -> int:
    script = _load_script(args.script)
    report = validate_script(script, _load_dict(args.dict))
    sys.stdout.write(render_report(report, args.format))
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_run(args) -> int:
    script = _load_script(args.script)
    refused = _gate(args, script)
    if refused is not None:
        return refused
    if args.records is None:
        raise UsageError("--records is required")
    if args.trace_all and args.out is None:
        raise UsageError("--trace-all needs --out (traces go to <out>.traces.jsonl)")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")

    with open(args.records, "rb") as stream:
        if args.out is None:
            stats = run_stream(script, stream, lenient=args.lenient, jobs=args.jobs)
        else:
            out = Path(args.out)
            with atomic_output(out) as outcomes:
                if args.trace_all:
                    with atomic_output(out.with_name(out.name + ".traces.jsonl")) as traces:
                        stats = run_stream(script, stream, outcomes, traces, args.lenient, args.jobs)
                else:
                    stats = run_stream(script, stream, outcomes, lenient=args.lenient, jobs=args.jobs)

    table = format_stats(stats, script, args.lenient)
    if args.stats is None:
        sys.stdout.write(table)
    else:
        from .plotting import plot_waterfall

        stats_path = Path(args.stats)
        with atomic_output(stats_path) as fh:
            fh.write(table)
        plot_waterfall(stats, script, stats_path.with_suffix(".png"))
    return EXIT_OK


def cmd_trace(args) -> int:
    script = _load_script(args.script)
    refused = _gate(args, script)
    if refused is not None:
        return refused
    if args.records is None:
        raise UsageError("--records is required")
    engine = CascadeEngine(script, args.lenient)
    with open(args.records, "rb") as stream:
        for record in load_records(stream, lenient=args.lenient):
            if record.record_id == args.record_id:
                trace = engine.trace(record)
                break
        else:
            raise RecordNotFound(args.record_id)
    if args.format == "structured":
        sys.stdout.write(trace.to_json() + "\n")
    else:
        sys.stdout.write(format_trace_table(trace, script))
    return EXIT_OK


def cmd_transform(args) -> int:
    tree = load_tree(_read_text(args.tree))
    script = tree_to_cascade(tree)
    if args.simplify:
        script = simplify_cascade(script, seed=args.seed)
    text = render_script(script)
    if args.out is None:
        sys.stdout.write(text)
        report = sys.stderr
    else:
        with atomic_output(Path(args.out)) as fh:
            fh.write(text)
        report = sys.stdout
    if not args.check:
        return EXIT_OK

    domain = derive_domain(tree, script)
    try:
        verdict = equivalence_oracle(tree, script, domain)
    except DomainTooLarge:
        verdict = equivalence_oracle(tree, script, domain, sample_seed=args.seed)
    scope = f"{verdict.points_checked} points" + ("" if verdict.exhaustive else ", sampled")
    if verdict.equal:
        report.write(f"equivalent ({scope})\n")
    else:
        report.write(f"NOT equivalent ({scope}); counterexample: {json.dumps(verdict.counterexample)}\n")
    is_list, offending = is_one_decision_list(script)
    if is_list:
        report.write("1-decision list: yes\n")
    else:
        report.write(f"1-decision list: no (statements with compound tests: {', '.join(map(str, offending))})\n")
    return EXIT_OK if verdict.equal else EXIT_INVALID


def cmd_check_dict(args) -> int:
    if args.dict is None:
        raise UsageError("--dict is required")
    dictionary, diagnostics = read_dictionary(_read_text(args.dict))
    diagnostics = diagnostics + [d for d in check_dictionary(dictionary) if d not in diagnostics]
    for d in diagnostics:
        sys.stdout.write(f"{d.kind}: {d.message}\n")
    sys.stdout.write(f"{'OK' if not diagnostics else 'FAILED'}: {len(dictionary.entries)} annotations, {len(diagnostics)} problems\n")
    return EXIT_OK if not diagnostics else EXIT_INVALID


def cmd_gen(args) -> int:
    dictionary = _load_dict(args.dict)
    if args.count < 0:
        raise UsageError("--count must not be negative")
    if args.out is None:
        write_records(dictionary, args.count, args.seed, sys.stdout)
    else:
        with atomic_output(Path(args.out)) as fh:
            write_records(dictionary, args.count, args.seed, fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-verify",
        description="Validate, run and trace annotated first-match rule cascades.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument("--format", choices=("human", "structured"), default="human")

    p = sub.add_parser("validate", help="check meta-predicates against the dictionary")
    p.add_argument("script")
    p.add_argument("--dict")
    add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="evaluate a script over a record file")
    p.add_argument("script")
    p.add_argument("--dict")
    p.add_argument("--records")
    p.add_argument("--out", help="per-record outcomes (TSV)")
    p.add_argument("--stats", help="waterfall table (TSV); a PNG chart is written alongside")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--trace-all", action="store_true")
    p.add_argument("--no-validate", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    add_format(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("trace", help="show which rule decided one record")
    p.add_argument("script")
    p.add_argument("record_id")
    p.add_argument("--dict")
    p.add_argument("--records")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--no-validate", action="store_true")
    add_format(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("transform", help="convert a decision tree into a cascade script")
    p.add_argument("tree")
    p.add_argument("--out")
    p.add_argument("--simplify", action="store_true")
    p.add_argument("--check", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled equivalence checks")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check-dict", help="check a classification dictionary")
    p.add_argument("--dict")
    p.set_defaults(func=cmd_check_dict)

    p = sub.add_parser("gen", help="write seeded synthetic records")
    p.add_argument("--dict")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except TypeMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SimplificationUnsound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ScriptSyntaxError, DictionaryError, MalformedRecord, RecordNotFound, TreeFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CascadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
