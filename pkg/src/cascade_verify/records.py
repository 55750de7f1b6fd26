"""Flat annotation records and their newline-delimited JSON file format."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import IO, Union

from .errors import MalformedRecord

ID_KEY = "_id"


class _MissingType:
    """Singleton marking an annotation absent from a record."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_MissingType, ())


MISSING = _MissingType()

Value = Union[str, int, float, bool]


def value_kind(value: object) -> str:
    """Name the value kind: ``text``, ``integer``, ``real``, ``boolean`` or ``missing``."""
    t = type(value)
    if t is bool:
        return "boolean"
    if t is int:
        return "integer"
    if t is float:
        return "real"
    if t is str:
        return "text"
    if value is MISSING or value is None:
        return "missing"
    return t.__name__


@dataclass(frozen=True)
class Record:
    record_id: str
    entries: Mapping[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        if not self.record_id:
            raise ValueError("record_id must be non-empty")


def get_value(record: Record, annotation: str):
    """Return the stored value, or ``MISSING`` when the annotation is absent."""
    value = record.entries.get(annotation)
    return MISSING if value is None else value


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name}")


def parse_record_line(line: str, line_number: int) -> Record:
    try:
        obj = json.loads(line, parse_constant=_reject_constant)
    except ValueError as exc:
        raise MalformedRecord(line_number, str(exc)) from None
    if not isinstance(obj, dict):
        raise MalformedRecord(line_number, "record is not an object")

    record_id = f"line:{line_number}"
    entries: dict[str, Value] = {}
    for key, value in obj.items():
        if key == ID_KEY:
            if not isinstance(value, str) or not value:
                raise MalformedRecord(line_number, "_id must be a non-empty string")
            record_id = value
            continue
        t = type(value)
        if t is float:
            if not math.isfinite(value):
                raise MalformedRecord(line_number, f"non-finite value for {key!r}")
        elif value is None:
            # explicit null is treated as absent
            continue
        elif t not in (str, int, bool):
            raise MalformedRecord(line_number, f"nested value for {key!r}")
        entries[key] = value
    return Record(record_id, entries)


def serialize_record(record: Record) -> str:
    obj = {ID_KEY: record.record_id}
    obj.update(record.entries)
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


class RecordReader:
    """Lazy iterator over a record stream.

    In strict mode the first malformed line raises ``MalformedRecord``; in
    lenient mode it is skipped and counted in ``skipped``.  Blank lines are
    ignored but still advance the line counter.
    """

    def __init__(
        self,
        source: Union[IO[bytes], IO[str], Iterable],
        lenient: bool = False,
        first_line: int = 1,
    ):
        self.source = source
        self.lenient = lenient
        self.skipped = 0
        # number of the line most recently read
        self.line_number = first_line - 1

    def __iter__(self) -> Iterator[Record]:
        for raw in self.source:
            self.line_number += 1
            if isinstance(raw, bytes):
                try:
                    raw = raw.decode("utf-8")
                except UnicodeDecodeError as exc:
                    if self._skip(MalformedRecord(self.line_number, f"invalid UTF-8: {exc}")):
                        continue
            if not raw.strip():
                continue
            try:
                yield parse_record_line(raw, self.line_number)
            except MalformedRecord as exc:
                self._skip(exc)

    def _skip(self, exc: MalformedRecord) -> bool:
        if not self.lenient:
            raise exc
        self.skipped += 1
        return True


def load_records(source, lenient: bool = False) -> RecordReader:
    """Read newline-delimited records from a byte or text stream, in input order."""
    return RecordReader(source, lenient=lenient)
