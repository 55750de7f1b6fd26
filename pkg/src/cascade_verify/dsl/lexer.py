"""Line-oriented tokenizer for cascade scripts.

The source is split into logical lines.  Newlines inside ``()`` or ``{}``
continue the current line, comments run to end of line, and a triple-quoted
validation block becomes a single item.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ScriptSyntaxError

KEYWORDS = frozenset({"if", "return", "and", "or", "not", "in", "True", "False"})

_TOKEN = re.compile(
    r"""
    (?P<NUMBER>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP><=|>=|==|!=|<|>)
  | (?P<PUNCT>[(){},:=\-])
    """,
    re.VERBOSE,
)
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, KEYWORD, NUMBER, STRING, OP, or the punctuation itself
    value: object
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "STRING":
            return f"string {self.value!r}"
        if self.kind == "END":
            return "end of line"
        return repr(str(self.value))


@dataclass
class LogicalLine:
    kind: str  # "code", "comment", "blank", "block"
    line: int
    indent: int = 0
    tokens: list[Token] = field(default_factory=list)
    text: str = ""
    # for "block": (line number, text) for every line between the delimiters
    body: list[tuple[int, str]] = field(default_factory=list)
    end_line: int = 0


class _Scanner:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.line_start = 0

    @property
    def column(self) -> int:
        return self.pos - self.line_start + 1

    def error(self, message: str, line: int | None = None, column: int | None = None):
        return ScriptSyntaxError(line or self.line, column or self.column, message)

    def newline(self):
        self.pos += 1
        self.line += 1
        self.line_start = self.pos


def _read_string(sc: _Scanner) -> Token:
    quote = sc.src[sc.pos]
    line, col = sc.line, sc.column
    sc.pos += 1
    out = []
    while True:
        if sc.pos >= len(sc.src) or sc.src[sc.pos] == "\n":
            raise sc.error("unterminated string", line, col)
        ch = sc.src[sc.pos]
        if ch == quote:
            sc.pos += 1
            return Token("STRING", "".join(out), line, col)
        if ch == "\\":
            nxt = sc.src[sc.pos + 1 : sc.pos + 2]
            if nxt not in _ESCAPES:
                raise sc.error(f"unknown escape \\{nxt}")
            out.append(_ESCAPES[nxt])
            sc.pos += 2
            continue
        out.append(ch)
        sc.pos += 1


def _read_block(sc: _Scanner, start_line: int) -> LogicalLine:
    sc.pos += 3
    item = LogicalLine("block", start_line)
    current: list[str] = []
    current_line = sc.line
    while True:
        if sc.pos >= len(sc.src):
            raise sc.error("unterminated validation block", start_line, 1)
        if sc.src.startswith('"""', sc.pos):
            item.body.append((current_line, "".join(current)))
            sc.pos += 3
            item.end_line = sc.line
            break
        ch = sc.src[sc.pos]
        if ch == "\n":
            item.body.append((current_line, "".join(current)))
            current = []
            sc.newline()
            current_line = sc.line
            continue
        current.append(ch)
        sc.pos += 1
    # only whitespace or a comment may follow the closing delimiter
    while sc.pos < len(sc.src) and sc.src[sc.pos] in " \t\r":
        sc.pos += 1
    if sc.pos < len(sc.src) and sc.src[sc.pos] not in "\n#":
        raise sc.error("unexpected text after validation block")
    while sc.pos < len(sc.src) and sc.src[sc.pos] != "\n":
        sc.pos += 1
    return item


def logical_lines(source: str) -> list[LogicalLine]:
    sc = _Scanner(source.replace("\r\n", "\n"))
    items: list[LogicalLine] = []
    current: LogicalLine | None = None
    depth = 0
    at_line_start = True

    while sc.pos < len(sc.src):
        ch = sc.src[sc.pos]
        if at_line_start and current is None:
            # measure indentation of a fresh physical line
            start = sc.pos
            while sc.pos < len(sc.src) and sc.src[sc.pos] in " \t":
                sc.pos += 1
            indent = sc.pos - start
            at_line_start = False
            if sc.pos >= len(sc.src):
                break
            ch = sc.src[sc.pos]
            if ch == "\n":
                items.append(LogicalLine("blank", sc.line))
                sc.newline()
                at_line_start = True
                continue
            if ch == "#":
                end = sc.src.find("\n", sc.pos)
                end = len(sc.src) if end < 0 else end
                items.append(LogicalLine("comment", sc.line, indent, text=sc.src[sc.pos + 1 : end].strip()))
                sc.pos = end
                continue
            if sc.src.startswith('"""', sc.pos):
                block = _read_block(sc, sc.line)
                block.indent = indent
                items.append(block)
                continue
            current = LogicalLine("code", sc.line, indent)
            continue

        if ch == "\n":
            if current is not None and depth == 0:
                current.end_line = sc.line
                items.append(current)
                current = None
            sc.newline()
            at_line_start = current is None
            continue
        if ch in " \t\r":
            sc.pos += 1
            continue
        if ch == "#":
            while sc.pos < len(sc.src) and sc.src[sc.pos] != "\n":
                sc.pos += 1
            continue
        if current is None:
            # text after a validation block on the same line is handled above
            current = LogicalLine("code", sc.line, 0)
        if ch in "\"'":
            if sc.src.startswith('"""', sc.pos):
                raise sc.error("validation block must start its own line")
            current.tokens.append(_read_string(sc))
            continue
        m = _TOKEN.match(sc.src, sc.pos)
        if not m:
            raise sc.error(f"unexpected character {ch!r}")
        kind = m.lastgroup
        text = m.group()
        if kind == "NAME" and text in KEYWORDS:
            kind = "KEYWORD"
        elif kind == "PUNCT":
            kind = text
            if text in "({":
                depth += 1
            elif text in ")}":
                depth = max(0, depth - 1)
        current.tokens.append(Token(kind, text, sc.line, sc.column))
        sc.pos = m.end()

    if current is not None:
        if depth:
            raise sc.error("unclosed bracket at end of input")
        current.end_line = sc.line
        items.append(current)
    return items
