"""Recursive-descent parser for cascade scripts.

Grammar::

    script        := constant_def* statement* final_return
    constant_def  := NAME "=" set_literal
    statement     := [validation_block] "if" predicate ":" NEWLINE INDENT return_line
    final_return  := "return" ("True" | "False")

    predicate     := and_expr ("or" and_expr)*
    and_expr      := not_expr ("and" not_expr)*
    not_expr      := "not" not_expr | primary
    primary       := "(" predicate ")" | operand [cmp_tail | ["not"] "in" set]
    cmp_tail      := (CMP_OP operand)+
    set           := set_literal | NAME
"""

from __future__ import annotations

import hashlib
import math
import re

from ..dictionary import Dimension, normalize_label
from ..errors import MissingFinalAction, ScriptSyntaxError, UndefinedSetRef, UnknownDirective
from .lexer import LogicalLine, Token, logical_lines
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
)

_META = re.compile(r"^@(?P<dim>[A-Za-z_][A-Za-z0-9_]*)\s*\((?P<value>.*)\)\s*$")
_BARE_VALUE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\- ]*$")
_QUOTED_VALUE = re.compile(r"""^(?:"[^"\\]*"|'[^'\\]*')$""")


class _TokenStream:
    def __init__(self, line: LogicalLine):
        self.tokens = line.tokens
        self.pos = 0
        last = line.tokens[-1] if line.tokens else None
        self.end = Token("END", "", line.end_line or line.line, (last.column + len(str(last.value)) + 1) if last else 1)

    def peek(self, offset: int = 0) -> Token:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else self.end

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at(self, kind: str, value=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def expect(self, kind: str, value=None, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            raise _error(tok, what or repr(value if value is not None else kind))
        return self.next()

    def expect_end(self):
        if self.peek().kind != "END":
            raise _error(self.peek(), "end of line")


def _error(tok: Token, expected: str) -> ScriptSyntaxError:
    return ScriptSyntaxError(tok.line, tok.column, f"expected {expected}, found {tok.describe()}")


def _number(tok: Token) -> Const:
    text = str(tok.value)
    if re.fullmatch(r"\d+", text):
        return Const(int(text))
    value = float(text)
    if not math.isfinite(value):
        raise ScriptSyntaxError(tok.line, tok.column, f"numeric constant {text} is not finite")
    return Const(value)


class _ExprParser:
    """Parses one predicate or set literal from a token stream."""

    def __init__(self, ts: _TokenStream, constants: dict, set_refs: list):
        self.ts = ts
        self.constants = constants
        self.set_refs = set_refs

    def predicate(self) -> Expr:
        parts = [self.and_expr()]
        while self.ts.at("KEYWORD", "or"):
            self.ts.next()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_expr(self) -> Expr:
        parts = [self.not_expr()]
        while self.ts.at("KEYWORD", "and"):
            self.ts.next()
            parts.append(self.not_expr())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def not_expr(self) -> Expr:
        # "not in" is never at the start of an expression, so this is unambiguous
        if self.ts.at("KEYWORD", "not"):
            self.ts.next()
            return Not(self.not_expr())
        return self.primary()

    def primary(self) -> Expr:
        if self.ts.at("("):
            self.ts.next()
            inner = self.predicate()
            self.ts.expect(")", what="')'")
            return inner
        start = self.ts.peek()
        left = self.operand()
        tok = self.ts.peek()
        if tok.kind == "OP":
            operands = [left]
            ops = []
            while self.ts.at("OP"):
                ops.append(self.ts.next().value)
                operands.append(self.operand())
            return Compare(tuple(operands), tuple(ops))
        if tok.kind == "KEYWORD" and tok.value == "in":
            self.ts.next()
            return Membership(left, self.set_operand(), False)
        if tok.kind == "KEYWORD" and tok.value == "not" and self.ts.peek(1).value == "in":
            self.ts.next()
            self.ts.next()
            return Membership(left, self.set_operand(), True)
        if isinstance(left, Var) or (isinstance(left, Const) and isinstance(left.value, bool)):
            return left
        raise ScriptSyntaxError(start.line, start.column, f"constant {start.describe()} is not a condition")

    def operand(self):
        tok = self.ts.peek()
        if tok.kind == "NAME":
            self.ts.next()
            if tok.value in self.constants:
                raise ScriptSyntaxError(
                    tok.line, tok.column, f"set constant {tok.value!r} cannot be used as a value"
                )
            return Var(str(tok.value))
        return self.constant(what="variable or constant")

    def constant(self, what: str = "constant") -> Const:
        tok = self.ts.peek()
        if tok.kind == "NUMBER":
            self.ts.next()
            return _number(tok)
        if tok.kind == "-" and self.ts.peek(1).kind == "NUMBER":
            self.ts.next()
            num = _number(self.ts.next())
            return Const(-num.value)
        if tok.kind == "STRING":
            self.ts.next()
            return Const(tok.value)
        if tok.kind == "KEYWORD" and tok.value in ("True", "False"):
            self.ts.next()
            return Const(tok.value == "True")
        raise _error(tok, what)

    def set_operand(self):
        tok = self.ts.peek()
        if tok.kind == "NAME":
            self.ts.next()
            self.set_refs.append(tok)
            return SetRef(str(tok.value))
        return self.set_literal()

    def set_literal(self) -> SetLiteral:
        self.ts.expect("{", what="'{' or set name")
        items = []
        while not self.ts.at("}"):
            items.append(self.constant())
            if not self.ts.at(","):
                break
            self.ts.next()
        self.ts.expect("}", what="'}'")
        return SetLiteral(tuple(items))


def _parse_block(item: LogicalLine) -> tuple[MetaPredicate, ...]:
    metas = []
    for line_no, text in item.body:
        stripped = text.strip()
        if not stripped:
            continue
        column = len(text) - len(text.lstrip()) + 1
        m = _META.match(stripped)
        if not m:
            raise ScriptSyntaxError(line_no, column, "validation block may only contain @dimension(value) lines")
        name = m.group("dim")
        try:
            dimension = Dimension.from_name(name)
        except ValueError:
            raise UnknownDirective(line_no, column, f"unknown directive @{name}") from None
        raw = m.group("value").strip()
        if not (_QUOTED_VALUE.match(raw) or _BARE_VALUE.match(raw)) or not normalize_label(raw):
            raise ScriptSyntaxError(line_no, column, f"invalid value {raw!r} in @{name}")
        metas.append(MetaPredicate(dimension, normalize_label(raw), raw))
    return tuple(metas)


def _parse_return(item: LogicalLine) -> bool:
    ts = _TokenStream(item)
    ts.expect("KEYWORD", "return")
    tok = ts.peek()
    if tok.kind != "KEYWORD" or tok.value not in ("True", "False"):
        raise _error(tok, "True or False")
    ts.next()
    ts.expect_end()
    return tok.value == "True"


def parse_predicate(text: str, constants: dict | None = None) -> Expr:
    """Parse a standalone predicate expression (used by decision-tree files)."""
    items = [it for it in logical_lines(text) if it.kind == "code"]
    if len(items) != 1:
        raise ScriptSyntaxError(1, 1, "expected a single predicate expression")
    refs: list[Token] = []
    ts = _TokenStream(items[0])
    expr = _ExprParser(ts, constants or {}, refs).predicate()
    ts.expect_end()
    for tok in refs:
        if tok.value not in (constants or {}):
            raise UndefinedSetRef(tok.line, tok.column, f"undefined set {tok.value!r}")
    return expr


def parse_set_literal(text: str) -> SetLiteral:
    items = [it for it in logical_lines(text) if it.kind == "code"]
    if len(items) != 1:
        raise ScriptSyntaxError(1, 1, "expected a set literal")
    ts = _TokenStream(items[0])
    lit = _ExprParser(ts, {}, []).set_literal()
    ts.expect_end()
    return lit


def script_hash(script_text: str) -> str:
    return hashlib.sha256(script_text.encode("utf-8")).hexdigest()


def parse_script(source: str) -> Script:
    """Parse script source into a ``Script``; raises ``ScriptSyntaxError`` subclasses."""
    items = logical_lines(source)
    constants: dict[str, SetLiteral] = {}
    statements: list[Statement] = []
    set_refs: list[Token] = []
    comments: list[str] = []
    last_was_comment = False
    pending_block: tuple[LogicalLine, tuple[MetaPredicate, ...]] | None = None
    final_action: bool | None = None
    i = 0

    while i < len(items):
        item = items[i]
        i += 1
        if item.kind == "blank":
            last_was_comment = False
            continue
        if item.kind == "comment":
            if not last_was_comment:
                comments = []
            comments.append(item.text)
            last_was_comment = True
            continue
        last_was_comment = False

        if final_action is not None:
            raise ScriptSyntaxError(item.line, item.indent + 1, "nothing may follow the final return")
        if item.indent:
            raise ScriptSyntaxError(item.line, item.indent + 1, "unexpected indentation")

        if item.kind == "block":
            if pending_block is not None:
                raise ScriptSyntaxError(item.line, 1, "two validation blocks for one statement")
            pending_block = (item, _parse_block(item))
            continue

        ts = _TokenStream(item)
        first = ts.peek()

        if first.kind == "NAME" and ts.peek(1).kind == "=":
            if statements or pending_block:
                raise ScriptSyntaxError(first.line, first.column, "set constants must precede all statements")
            name = str(first.value)
            if name in constants:
                raise ScriptSyntaxError(first.line, first.column, f"set constant {name!r} defined twice")
            ts.next()
            ts.next()
            constants[name] = _ExprParser(ts, {}, []).set_literal()
            ts.expect_end()
            comments = []
            continue

        if first.kind == "KEYWORD" and first.value == "return":
            if pending_block is not None:
                raise ScriptSyntaxError(first.line, first.column, "validation block must precede an if statement")
            final_action = _parse_return(item)
            continue

        if not (first.kind == "KEYWORD" and first.value == "if"):
            raise _error(first, "'if', 'return' or a set constant")
        ts.next()
        predicate = _ExprParser(ts, constants, set_refs).predicate()
        ts.expect(":", what="':'")
        ts.expect_end()

        # the action is the next code line, indented deeper than the if
        while i < len(items) and items[i].kind in ("blank", "comment"):
            i += 1
        if i >= len(items) or items[i].kind != "code" or items[i].indent <= item.indent:
            where = items[i] if i < len(items) else item
            raise ScriptSyntaxError(where.line, 1, "expected an indented 'return True' or 'return False'")
        action_item = items[i]
        i += 1
        action = _parse_return(action_item)
        # reject nested bodies: nothing more indented may follow the return
        j = i
        while j < len(items) and items[j].kind in ("blank", "comment"):
            j += 1
        if j < len(items) and items[j].indent > 0:
            raise ScriptSyntaxError(
                items[j].line, items[j].indent + 1, "nested statements are not supported in a cascade"
            )

        block_item, metas = pending_block if pending_block else (None, ())
        start = block_item.line if block_item is not None else item.line
        statements.append(
            Statement(
                index=len(statements),
                label=" ".join(c for c in comments if c),
                meta_predicates=metas,
                predicate=predicate,
                action=action,
                source_span=(start, action_item.end_line or action_item.line),
            )
        )
        pending_block = None
        comments = []

    if pending_block is not None:
        raise ScriptSyntaxError(pending_block[0].line, 1, "validation block without a statement")
    if final_action is None:
        last = items[-1].line if items else 1
        raise MissingFinalAction(last, 1, "script must end with 'return True' or 'return False'")
    for tok in set_refs:
        if tok.value not in constants:
            raise UndefinedSetRef(tok.line, tok.column, f"undefined set {tok.value!r}")

    from .render import render_script

    script = Script(constants, tuple(statements), final_action)
    return Script(constants, script.statements, final_action, script_hash(render_script(script)))
