"""Static meta-predicate validation of cascade scripts.

A statement is valid when every meta-predicate in its validation block is
satisfied by at least one variable of its predicate.  Variables that have
no classification are reported separately.  Predicates are never evaluated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .dictionary import ClassificationDictionary, Dimension, classify
from .dsl import MetaPredicate, Script, Statement, extract_variables

ERROR = "Error"
WARNING = "Warning"

UNSATISFIED = "UnsatisfiedMetaPredicate"
UNCLASSIFIED = "UnclassifiedAnnotation"
EMPTY_BLOCK = "EmptyValidationBlock"


@dataclass(frozen=True)
class VariableInfo:
    name: str
    purpose: Optional[str] = None
    knowledge_domain: Optional[str] = None
    scale: Optional[str] = None
    method: Optional[str] = None

    @property
    def classified(self) -> bool:
        return self.purpose is not None

    def summary(self) -> str:
        if not self.classified:
            return f"{self.name} (unclassified)"
        return f"{self.name} ({self.knowledge_domain}, {self.scale})"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "purpose": self.purpose,
            "knowledge_domain": self.knowledge_domain,
            "scale": self.scale,
            "method": self.method,
        }


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    statement_index: int
    line: int
    kind: str
    message: str
    variables_found: tuple[VariableInfo, ...] = ()
    meta_predicate: Optional[MetaPredicate] = None
    annotation: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "severity": self.severity,
            "statement_index": self.statement_index,
            "line": self.line,
            "kind": self.kind,
        }
        if self.meta_predicate is not None:
            out["dimension"] = self.meta_predicate.dimension.value
            out["value"] = self.meta_predicate.value
        if self.annotation is not None:
            out["annotation"] = self.annotation
        out["message"] = self.message
        out["variables_found"] = [v.to_dict() for v in self.variables_found]
        return out


@dataclass(frozen=True)
class ValidationReport:
    script_hash: str
    diagnostics: tuple[Diagnostic, ...] = field(default_factory=tuple)

    @property
    def errors(self) -> int:
        return sum(d.severity == ERROR for d in self.diagnostics)

    @property
    def warnings(self) -> int:
        return sum(d.severity == WARNING for d in self.diagnostics)

    @property
    def valid(self) -> bool:
        return self.errors == 0


def _variable_info(dictionary: ClassificationDictionary, name: str) -> VariableInfo:
    entry = dictionary.entry(name)
    if entry is None:
        return VariableInfo(name)
    return VariableInfo(
        name,
        entry.display(Dimension.PURPOSE),
        entry.display(Dimension.KNOWLEDGE_DOMAIN),
        entry.display(Dimension.SCALE),
        entry.display(Dimension.METHOD),
    )


def validate_statement(
    stmt: Statement,
    dictionary: ClassificationDictionary,
    unclassified_is_error: bool = True,
) -> list[Diagnostic]:
    variables = sorted(extract_variables(stmt.predicate))
    found = tuple(_variable_info(dictionary, v) for v in variables)
    out: list[Diagnostic] = []

    for meta in stmt.meta_predicates:
        # an absent classification (None) never equals a meta-predicate value
        if any(classify(dictionary, v, meta.dimension) == meta.value for v in variables):
            continue
        out.append(
            Diagnostic(
                ERROR,
                stmt.index,
                stmt.line,
                UNSATISFIED,
                f"No variable satisfies {meta.text}",
                found,
                meta_predicate=meta,
            )
        )

    for name in variables:
        if name in dictionary:
            continue
        out.append(
            Diagnostic(
                ERROR if unclassified_is_error else WARNING,
                stmt.index,
                stmt.line,
                UNCLASSIFIED,
                f"Unclassified annotation {name}",
                found,
                annotation=name,
            )
        )

    if not stmt.meta_predicates:
        out.append(
            Diagnostic(
                WARNING,
                stmt.index,
                stmt.line,
                EMPTY_BLOCK,
                "Statement has no validation block",
                found,
            )
        )
    return out


def validate_script(
    script: Script,
    dictionary: ClassificationDictionary,
    unclassified_is_error: bool = True,
) -> ValidationReport:
    diagnostics: list[Diagnostic] = []
    for stmt in script.statements:
        diagnostics.extend(validate_statement(stmt, dictionary, unclassified_is_error))
    return ValidationReport(script.source_hash, tuple(diagnostics))


def _summary_line(report: ValidationReport) -> str:
    status = "OK" if report.valid else "FAILED"
    return f"{status}: {report.errors} errors, {report.warnings} warnings"


def _render_human(report: ValidationReport) -> str:
    lines = [_summary_line(report)]
    by_statement: dict[int, list[Diagnostic]] = {}
    for diag in report.diagnostics:
        by_statement.setdefault(diag.statement_index, []).append(diag)

    for index, diags in by_statement.items():
        errors = [d for d in diags if d.severity == ERROR]
        warnings = [d for d in diags if d.severity == WARNING]
        line = diags[0].line
        if errors:
            lines.append(f"ValidationError in statement at line {line}:")
            for d in errors:
                lines.append(f"- {d.message}")
            variables = errors[0].variables_found
            if variables:
                lines.append("Variables found: " + ", ".join(v.summary() for v in variables))
        for d in warnings:
            lines.append(f"Warning in statement at line {line}: {d.message}")
    return "\n".join(lines) + "\n"


def _render_structured(report: ValidationReport) -> str:
    lines = [json.dumps(d.to_dict(), sort_keys=False) for d in report.diagnostics]
    summary = {
        "summary": {
            "script_hash": report.script_hash,
            "errors": report.errors,
            "warnings": report.warnings,
            "valid": report.valid,
        }
    }
    lines.append(json.dumps(summary))
    return "\n".join(lines) + "\n"


def render_report(report: ValidationReport, format: str = "human") -> str:
    """Render a report as human-readable text or as JSON lines (``structured``)."""
    if format == "human":
        return _render_human(report)
    if format == "structured":
        return _render_structured(report)
    raise ValueError(f"unknown report format {format!r}")
