"""Command line interface.

Subcommands: ingest (stream -> snapshot), query (snapshot -> ranked lines),
decay (snapshot -> decayed snapshot), bench (threaded stress run + report).
Exit codes: 0 success, 1 input or validation error, 2 bench invariant
violation.
"""

import argparse
import json
import sys

from .bench import WorkloadConfig, run_bench
from .errors import InputError
from .graph import DecayConfig, Graph
from .snapshot import ParseStats, parse_stream, read_snapshot, write_snapshot


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for invariant
    # violations here, so usage errors are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_graph(path: str) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return read_snapshot(fh)


def _dump_graph(graph: Graph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_snapshot(graph, fh)


def cmd_ingest(args) -> int:
    config = DecayConfig(
        factor=args.decay_factor, every_n_transitions=args.decay_every
    )
    graph = Graph(config)
    stats = ParseStats()
    with open(args.input, "r", encoding="utf-8") as fh:
        for record in parse_stream(fh, lenient=args.lenient, stats=stats):
            graph.record_transition(record.src, record.dst)
    graph.quiesce()
    graph.stabilize_all()
    _dump_graph(graph, args.snapshot_out)
    summary = graph.stats()
    print(
        f"records={stats.records} skipped={stats.skipped} "
        f"sources={summary.sources} edges={summary.edges} "
        f"transitions={summary.transitions}"
    )
    return 0


def cmd_query(args) -> int:
    graph = _load_graph(args.snapshot)
    if args.top_n is not None:
        rec = graph.recommend_top_n(args.src, args.top_n)
    else:
        rec = graph.recommend_cumulative(args.src, args.threshold)
    if not rec.found:
        print(f"source {args.src!r} not in snapshot", file=sys.stderr)
        return 0
    for dst, p in rec.items:
        print(f"{dst},{p:.6f}")
    return 0


def cmd_decay(args) -> int:
    graph = _load_graph(args.snapshot)
    result = graph.decay(args.factor)
    graph.quiesce()
    _dump_graph(graph, args.snapshot_out)
    print(f"edges_removed={result.edges_removed}")
    return 0


def cmd_bench(args) -> int:
    config = WorkloadConfig(
        nodes=args.nodes,
        writers=args.writers,
        readers=args.readers,
        duration_secs=args.duration_secs,
        zipf_s=args.zipf_s,
        seed=args.seed,
        max_ops=args.max_ops,
    )
    graph = Graph()
    report = run_bench(graph, config)
    if args.json:
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        for line in report.format_lines():
            print(line)
    if args.snapshot_out:
        _dump_graph(graph, args.snapshot_out)
    if not report.passed:
        for err in report.thread_errors:
            print(f"thread error: {err}", file=sys.stderr)
        print("invariant violation, see report", file=sys.stderr)
        return 2
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mcprioq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="stream transitions into a snapshot")
    p.add_argument("--input", required=True, help="transition stream path")
    p.add_argument("--snapshot-out", required=True, help="snapshot output path")
    p.add_argument("--decay-every", type=int, default=None, metavar="N",
                   help="apply decay every N transitions")
    p.add_argument("--decay-factor", type=float, default=0.5, metavar="F",
                   help="decay factor (default 0.5)")
    p.add_argument("--lenient", action="store_true",
                   help="skip malformed lines instead of failing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="query a snapshot")
    p.add_argument("--snapshot", required=True, help="snapshot path")
    p.add_argument("--src", required=True, help="source node id")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--top-n", type=int, metavar="K",
                      help="return the K most likely destinations")
    mode.add_argument("--threshold", type=float, metavar="T",
                      help="return the shortest prefix with mass >= T")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("decay", help="decay a snapshot")
    p.add_argument("--snapshot", required=True, help="snapshot input path")
    p.add_argument("--factor", type=float, required=True,
                   help="decay factor in (0, 1]")
    p.add_argument("--snapshot-out", required=True, help="snapshot output path")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("bench", help="run the stress benchmark")
    p.add_argument("--nodes", type=int, required=True, help="node id space size")
    p.add_argument("--writers", type=int, required=True, help="writer threads")
    p.add_argument("--readers", type=int, required=True, help="reader threads")
    p.add_argument("--duration-secs", type=float, required=True,
                   help="wall clock run time")
    p.add_argument("--zipf-s", type=float, default=1.0, metavar="F",
                   help="Zipf exponent for destinations (default 1.0)")
    p.add_argument("--seed", type=int, default=0, metavar="U",
                   help="workload seed (default 0)")
    p.add_argument("--json", action="store_true",
                   help="print the report as one JSON object")
    p.add_argument("--max-ops", type=int, default=None, metavar="N",
                   help="stop each writer after N updates (deterministic runs)")
    p.add_argument("--snapshot-out", default=None,
                   help="write the post-run graph to this path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
