"""Chunked batch execution over a record file, optionally across processes.

The file is cut into fixed-size line chunks.  Each chunk is evaluated by the
same function whether it runs in this process or in a worker, and results
are written back in chunk order, so the worker count never changes output.
"""

from __future__ import annotations

import os
import tempfile
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import IO, Iterator, Optional

from .dsl import Script
from .engine import CascadeEngine, WaterfallStats, format_outcomes
from .records import RecordReader

CHUNK_LINES = 20_000


@dataclass
class ChunkResult:
    outcomes: str
    traces: str
    stats: WaterfallStats


class ChunkRunner:
    def __init__(self, script: Script, lenient: bool = False, trace_all: bool = False):
        self.engine = CascadeEngine(script, lenient)
        self.lenient = lenient
        self.trace_all = trace_all

    def __call__(self, first_line: int, lines: list[bytes]) -> ChunkResult:
        reader = RecordReader(lines, self.lenient, first_line)
        records = list(reader)
        batch = self.engine.run(records)
        batch.stats.skipped = reader.skipped
        traces = ""
        if self.trace_all:
            traces = "".join(self.engine.trace(r).to_json() + "\n" for r in records)
        return ChunkResult(format_outcomes(batch.outcomes), traces, batch.stats)


_worker: Optional[ChunkRunner] = None


def _init_worker(script: Script, lenient: bool, trace_all: bool) -> None:
    global _worker
    _worker = ChunkRunner(script, lenient, trace_all)


def _run_in_worker(first_line: int, lines: list[bytes]) -> ChunkResult:
    return _worker(first_line, lines)


def iter_chunks(stream: IO[bytes], size: int = CHUNK_LINES) -> Iterator[tuple[int, list[bytes]]]:
    first = 1
    while True:
        lines = list(islice(stream, size))
        if not lines:
            return
        yield first, lines
        first += len(lines)


def _results(script, stream, lenient, trace_all, jobs, chunk_lines) -> Iterator[ChunkResult]:
    chunks = iter_chunks(stream, chunk_lines)
    if jobs <= 1:
        runner = ChunkRunner(script, lenient, trace_all)
        for first, lines in chunks:
            yield runner(first, lines)
        return
    with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(script, lenient, trace_all)) as pool:
        pending: deque = deque()
        try:
            for first, lines in chunks:
                pending.append(pool.submit(_run_in_worker, first, lines))
                if len(pending) >= 2 * jobs:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()
        finally:
            for f in pending:
                f.cancel()


def run_stream(
    script: Script,
    stream: IO[bytes],
    outcomes_out: Optional[IO[str]] = None,
    traces_out: Optional[IO[str]] = None,
    lenient: bool = False,
    jobs: int = 1,
    chunk_lines: Optional[int] = None,
) -> WaterfallStats:
    """Evaluate every record in ``stream``, writing outcome and trace lines in input order."""
    chunk_lines = chunk_lines or CHUNK_LINES
    stats = WaterfallStats.empty(len(script.statements))
    for result in _results(script, stream, lenient, traces_out is not None, jobs, chunk_lines):
        if outcomes_out is not None:
            outcomes_out.write(result.outcomes)
        if traces_out is not None:
            traces_out.write(result.traces)
        stats = stats.merge(result.stats)
    return stats


@contextmanager
def atomic_output(path: Path) -> Iterator[IO[str]]:
    """Open ``path`` for writing via a temporary sibling renamed on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
