"""Annotated first-match rule cascades: parse, validate, run, trace."""

__version__ = "0.1.0"

from .dictionary import (  # noqa: E402
    ClassificationDictionary,
    ClassificationEntry,
    Dimension,
    check_dictionary,
    classify,
    load_dictionary,
    load_sample_dictionary,
    normalize_label,
)
from .dsl import parse_script, render_script  # noqa: E402
from .engine import (  # noqa: E402
    CascadeEngine,
    Trace,
    TriState,
    WaterfallStats,
    eval_predicate,
    run_batch,
    run_record,
    trace_query,
)
from .records import MISSING, Record, load_records  # noqa: E402
from .tree import (  # noqa: E402
    Branch,
    DecisionTree,
    Leaf,
    equivalence_oracle,
    is_one_decision_list,
    simplify_cascade,
    tree_to_cascade,
)
from .validator import render_report, validate_script  # noqa: E402

__all__ = [
    "ClassificationDictionary", "ClassificationEntry", "Dimension", "check_dictionary", "classify",
    "load_dictionary", "load_sample_dictionary", "normalize_label",
    "parse_script", "render_script",
    "CascadeEngine", "Trace", "TriState", "WaterfallStats", "eval_predicate", "run_batch",
    "run_record", "trace_query",
    "MISSING", "Record", "load_records",
    "Branch", "DecisionTree", "Leaf", "equivalence_oracle", "is_one_decision_list",
    "simplify_cascade", "tree_to_cascade",
    "render_report", "validate_script",
]
