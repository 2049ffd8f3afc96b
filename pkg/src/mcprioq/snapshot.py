"""Transition-stream parsing and snapshot persistence.

Stream format: one ``src,dst`` transition per line. Blank lines and lines
whose first non-space character is ``#`` are skipped and never counted as
errors. Strict parsing raises StreamParseError with a 1-based line number;
lenient parsing skips bad lines and counts them.

Snapshot format, text with ``\\n`` line endings, pinned byte-for-byte:

    MCPRIOQ 1
    S <src> <total> <edge_count>
    E <dst> <count>
    ...

One ``S`` line per non-empty source, in lexicographic source order so the
bytes do not depend on per-process hash seeds; each is followed by exactly
edge_count ``E`` lines in queue order, counts non-increasing. Counts and
totals are decimal unsigned 64-bit. read_snapshot validates structure,
ordering, duplicate destinations, and that each total equals the sum of its
edge counts, then rebuilds queues in listed order without re-sorting.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, TextIO

from .errors import InputError, SnapshotError, StreamParseError
from .graph import Graph
from .ids import validate_node_id

MAGIC = "MCPRIOQ"
FORMAT_VERSION = 1
_U64_MAX = 2**64 - 1


class TransitionRecord(NamedTuple):
    src: str
    dst: str


@dataclass
class ParseStats:
    lines: int = 0  # every line seen, including blanks and comments
    records: int = 0  # well-formed transitions yielded
    skipped: int = 0  # malformed lines dropped (lenient mode only)


def parse_stream(lines: Iterable[str], lenient: bool = False,
                 stats: Optional[ParseStats] = None) -> Iterator[TransitionRecord]:
    """Yield TransitionRecords from an iterable of text lines."""
    for line_no, raw in enumerate(lines, start=1):
        if stats is not None:
            stats.lines += 1
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            src, sep, dst = line.partition(",")
            if not sep:
                raise InputError("expected 'src,dst'")
            if "," in dst:
                raise InputError("expected exactly one comma")
            validate_node_id(src)
            validate_node_id(dst)
        except InputError as exc:
            if lenient:
                if stats is not None:
                    stats.skipped += 1
                continue
            raise StreamParseError(line_no, str(exc)) from None
        if stats is not None:
            stats.records += 1
        yield TransitionRecord(src, dst)


def _parse_u64(field: str, what: str, line_no: int) -> int:
    if not field.isdigit():
        raise SnapshotError(line_no, f"{what} must be an unsigned integer, got {field!r}")
    value = int(field)
    if value > _U64_MAX:
        raise SnapshotError(line_no, f"{what} exceeds 64 bits")
    return value


def write_snapshot(graph: Graph, sink: TextIO) -> None:
    """Serialize graph to sink. Call at quiescence for a faithful dump;
    empty sources are omitted."""
    sink.write(f"{MAGIC} {FORMAT_VERSION}\n")
    for src, total, pairs in graph.export_sources():
        if not pairs:
            continue
        sink.write(f"S {src} {total} {len(pairs)}\n")
        for dst, count in pairs:
            sink.write(f"E {dst} {count}\n")


def read_snapshot(source: Iterable[str]) -> Graph:
    """Rebuild a Graph from snapshot lines; raises SnapshotError on any
    structural violation."""
    lines = iter(source)
    try:
        header = next(lines)
    except StopIteration:
        raise SnapshotError(1, "empty snapshot") from None
    if header.rstrip("\n") != f"{MAGIC} {FORMAT_VERSION}":
        raise SnapshotError(1, f"bad header {header.rstrip()!r}")
    graph = Graph()
    line_no = 1
    pending = None  # (line_no, src, total, remaining, pairs, seen, prev_count)
    for raw in lines:
        line_no += 1
        line = raw.rstrip("\n")
        fields = line.split(" ")
        if pending is not None:
            s_line, src, total, remaining, pairs, seen, prev_count = pending
            if fields[0] != "E":
                raise SnapshotError(line_no, f"expected E line under source {src!r}")
            if len(fields) != 3:
                raise SnapshotError(line_no, "E line needs 'E <dst> <count>'")
            dst = fields[1]
            try:
                validate_node_id(dst)
            except InputError as exc:
                raise SnapshotError(line_no, str(exc)) from None
            count = _parse_u64(fields[2], "count", line_no)
            if count < 1:
                raise SnapshotError(line_no, "edge count must be >= 1")
            if dst in seen:
                raise SnapshotError(line_no, f"duplicate destination {dst!r}")
            if prev_count is not None and count > prev_count:
                raise SnapshotError(line_no, "edge counts must be non-increasing")
            seen.add(dst)
            pairs.append((dst, count))
            remaining -= 1
            if remaining == 0:
                if sum(c for _, c in pairs) != total:
                    raise SnapshotError(
                        s_line, f"source {src!r} total does not match edge sum"
                    )
                graph.restore_source(src, total, pairs)
                pending = None
            else:
                pending = (s_line, src, total, remaining, pairs, seen, count)
            continue
        if fields[0] == "S":
            if len(fields) != 4:
                raise SnapshotError(line_no, "S line needs 'S <src> <total> <edge_count>'")
            src = fields[1]
            try:
                validate_node_id(src)
            except InputError as exc:
                raise SnapshotError(line_no, str(exc)) from None
            if graph.source_entry(src) is not None:
                raise SnapshotError(line_no, f"duplicate source {src!r}")
            total = _parse_u64(fields[2], "total", line_no)
            edge_count = _parse_u64(fields[3], "edge_count", line_no)
            if edge_count == 0:
                raise SnapshotError(line_no, "sources with zero edges are not written")
            pending = (line_no, src, total, edge_count, [], set(), None)
        elif line == "":
            raise SnapshotError(line_no, "blank line in snapshot")
        else:
            raise SnapshotError(line_no, f"unexpected line {line!r}")
    if pending is not None:
        raise SnapshotError(line_no, f"truncated snapshot: source {pending[1]!r} incomplete")
    return graph
