"""Workload generation and the concurrency stress harness.

The workload models the intended deployment shape: sources drawn uniformly,
destinations drawn Zipf(s)-ranked per source, so every source grows a
heavy-headed edge list. Each source gets its own affine permutation of the
rank space (a * rank + b mod n with gcd(a, n) = 1, both derived from the
seed), which decorrelates the hot destinations of different sources without
materializing n^2 state.

run_bench drives writer and reader threads against one Graph for a wall
clock duration (or a per-writer op budget, which makes single-writer runs
bit-reproducible), then verifies the structure: exact op conservation
against per-thread counters, totals equal to edge-count sums, queues sorted
after stabilize_all, zero traversal anomalies, zero reclamation canary
hits. Latencies are recorded per thread into histograms whose buckets
truncate nanoseconds to two significant digits; merging at join keeps the
hot loops allocation-light and lock-free.
"""

import math
import random
import threading
import time
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

from .errors import InputError, TraversalAnomalyError, UseAfterReclaimError
from .graph import Graph

THRESHOLDS = (0.5, 0.9, 0.99)

_MASK64 = 2**64 - 1


def _mix64(*parts: int) -> int:
    """splitmix64 over the parts; stable across processes and runs."""
    x = 0
    for part in parts:
        x = (x + part + 0x9E3779B97F4A7C15) & _MASK64
        z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        x = z ^ (z >> 31)
    return x


class ZipfSampler:
    """Inverse-CDF sampler over ranks 1..n with weight rank**-s."""

    def __init__(self, n: int, s: float):
        if n < 1:
            raise InputError(f"zipf n must be >= 1, got {n}")
        if s < 0:
            raise InputError(f"zipf s must be >= 0, got {s}")
        self.n = n
        self.s = s
        weights = [rank**-s for rank in range(1, n + 1)]
        norm = math.fsum(weights)
        cum = []
        running = 0.0
        for w in weights:
            running += w
            cum.append(running / norm)
        cum[-1] = 1.0  # float round-off must not let a sample escape rank n
        self._cum = cum
        self._norm = norm

    def probability(self, rank: int) -> float:
        if not (1 <= rank <= self.n):
            raise InputError(f"rank must be in [1, {self.n}], got {rank}")
        return rank**-self.s / self._norm

    def cumulative(self, rank: int) -> float:
        """P(X <= rank)."""
        if not (1 <= rank <= self.n):
            raise InputError(f"rank must be in [1, {self.n}], got {rank}")
        return self._cum[rank - 1]

    def sample(self, rng: random.Random) -> int:
        """One rank in [1, n]."""
        return bisect_right(self._cum, rng.random()) + 1


_SAMPLER_CACHE = {}


def zipf_sample(rng: random.Random, n: int, s: float) -> int:
    """One Zipf(s) rank in [1, n]; caches the cumulative table per (n, s)."""
    key = (n, s)
    sampler = _SAMPLER_CACHE.get(key)
    if sampler is None:
        sampler = _SAMPLER_CACHE[key] = ZipfSampler(n, s)
    return sampler.sample(rng)


def affine_params(seed: int, src_idx: int, n: int):
    """Per-source rank permutation parameters (a, b), gcd(a, n) = 1."""
    h = _mix64(seed, 0xA11FE, src_idx)
    a = 1 + h % (n - 1) if n > 1 else 1
    while math.gcd(a, n) != 1:
        a = 1 + a % (n - 1)
    b = (h >> 17) % n
    return a, b


@dataclass
class WorkloadConfig:
    nodes: int
    writers: int
    readers: int
    duration_secs: float
    zipf_s: float = 1.0
    seed: int = 0
    top_n: int = 10
    # Per-writer update budget; with one writer this pins the exact
    # operation sequence, making the final graph seed-reproducible.
    max_ops: Optional[int] = None

    def validate(self) -> None:
        if self.nodes < 2:
            raise InputError(f"nodes must be >= 2, got {self.nodes}")
        if self.writers < 0 or self.readers < 0:
            raise InputError("writers and readers must be >= 0")
        if self.duration_secs <= 0:
            raise InputError(f"duration must be > 0, got {self.duration_secs}")
        if self.zipf_s < 0:
            raise InputError(f"zipf s must be >= 0, got {self.zipf_s}")
        if self.seed < 0:
            raise InputError(f"seed must be >= 0, got {self.seed}")
        if self.top_n < 0:
            raise InputError(f"top_n must be >= 0, got {self.top_n}")
        if self.max_ops is not None and self.max_ops < 1:
            raise InputError(f"max_ops must be >= 1, got {self.max_ops}")


@dataclass
class BenchReport:
    elapsed_secs: float = 0.0
    update_ops: int = 0
    inference_ops: int = 0
    update_throughput: float = 0.0
    update_p50_ns: int = 0
    update_p99_ns: int = 0
    inference_p50_ns: int = 0
    inference_p99_ns: int = 0
    items_for_threshold: dict = field(default_factory=dict)  # t -> mean items
    anomalies_detected: int = 0
    canary_hits: int = 0
    conservation_ok: bool = True
    sorted_ok: bool = True
    thread_errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.anomalies_detected == 0
            and self.canary_hits == 0
            and self.conservation_ok
            and self.sorted_ok
            and not self.thread_errors
        )

    def to_dict(self) -> dict:
        return {
            "elapsed_secs": self.elapsed_secs,
            "update_ops": self.update_ops,
            "inference_ops": self.inference_ops,
            "update_throughput": self.update_throughput,
            "update_p50_ns": self.update_p50_ns,
            "update_p99_ns": self.update_p99_ns,
            "inference_p50_ns": self.inference_p50_ns,
            "inference_p99_ns": self.inference_p99_ns,
            "items_for_threshold": {
                str(t): mean for t, mean in sorted(self.items_for_threshold.items())
            },
            "anomalies_detected": self.anomalies_detected,
            "canary_hits": self.canary_hits,
            "conservation_ok": self.conservation_ok,
            "sorted_ok": self.sorted_ok,
            "thread_errors": list(self.thread_errors),
            "passed": self.passed,
        }

    def format_lines(self):
        lines = [
            f"elapsed_secs={self.elapsed_secs:.3f}",
            f"update_ops={self.update_ops}",
            f"inference_ops={self.inference_ops}",
            f"update_throughput={self.update_throughput:.1f}",
            f"update_p50_ns={self.update_p50_ns}",
            f"update_p99_ns={self.update_p99_ns}",
            f"inference_p50_ns={self.inference_p50_ns}",
            f"inference_p99_ns={self.inference_p99_ns}",
        ]
        for t in sorted(self.items_for_threshold):
            lines.append(f"items_at_{t}={self.items_for_threshold[t]:.2f}")
        lines += [
            f"anomalies_detected={self.anomalies_detected}",
            f"canary_hits={self.canary_hits}",
            f"conservation_ok={self.conservation_ok}",
            f"sorted_ok={self.sorted_ok}",
            f"thread_errors={len(self.thread_errors)}",
            f"passed={self.passed}",
        ]
        return lines


def latency_bucket(ns: int) -> int:
    """Truncate to two significant digits, e.g. 18734 -> 18000."""
    if ns < 100:
        return ns
    scale = 10 ** (len(str(ns)) - 2)
    return ns // scale * scale


def _merge_hist(into: dict, other: dict) -> None:
    for bucket, n in other.items():
        into[bucket] = into.get(bucket, 0) + n


def _percentile(hist: dict, q: float) -> int:
    total = sum(hist.values())
    if total == 0:
        return 0
    target = math.ceil(q * total)
    seen = 0
    for bucket in sorted(hist):
        seen += hist[bucket]
        if seen >= target:
            return bucket
    return 0


class _WriterState:
    __slots__ = ("ops", "hist")

    def __init__(self):
        self.ops = 0
        self.hist = {}


class _ReaderState:
    __slots__ = ("ops", "hist", "items", "anomalies", "canaries")

    def __init__(self):
        self.ops = 0
        self.hist = {}
        self.items = {t: [0, 0] for t in THRESHOLDS}  # t -> [item_sum, queries]
        self.anomalies = 0
        self.canaries = 0


def run_bench(graph: Graph, config: WorkloadConfig) -> BenchReport:
    """Drive the workload, then quiesce and verify. Returns the report;
    callers decide what a failed report means (the CLI exits 2)."""
    config.validate()
    names = [f"n{i}" for i in range(config.nodes)]
    sampler = ZipfSampler(config.nodes, config.zipf_s)
    nodes = config.nodes
    deadline = time.monotonic() + config.duration_secs
    start_gate = threading.Event()
    # Set once every writer finishes, so budgeted runs (max_ops) release
    # the readers instead of spinning out the rest of the wall clock.
    writers_done = threading.Event()
    errors = []
    errors_lock = threading.Lock()

    def writer_body(idx: int, state: _WriterState):
        rng = random.Random(_mix64(config.seed, 1, idx))
        params = {}
        budget = config.max_ops
        record = graph.record_transition
        hist = state.hist
        perf = time.perf_counter_ns
        monotonic = time.monotonic
        start_gate.wait()
        ops = 0
        while monotonic() < deadline and (budget is None or ops < budget):
            src_idx = rng.randrange(nodes)
            rank = sampler.sample(rng)
            ab = params.get(src_idx)
            if ab is None:
                ab = params[src_idx] = affine_params(config.seed, src_idx, nodes)
            dst_idx = (ab[0] * (rank - 1) + ab[1]) % nodes
            t0 = perf()
            record(names[src_idx], names[dst_idx])
            bucket = latency_bucket(perf() - t0)
            hist[bucket] = hist.get(bucket, 0) + 1
            ops += 1
        state.ops = ops

    def reader_body(idx: int, state: _ReaderState):
        rng = random.Random(_mix64(config.seed, 2, idx))
        hist = state.hist
        items = state.items
        perf = time.perf_counter_ns
        monotonic = time.monotonic
        start_gate.wait()
        ops = 0
        while monotonic() < deadline and not writers_done.is_set():
            src = names[rng.randrange(nodes)]
            try:
                if ops & 1 == 0:  # alternate top-n and cumulative queries
                    t0 = perf()
                    graph.recommend_top_n(src, config.top_n)
                    bucket = latency_bucket(perf() - t0)
                else:
                    t = THRESHOLDS[(ops >> 1) % len(THRESHOLDS)]
                    t0 = perf()
                    rec = graph.recommend_cumulative(src, t)
                    bucket = latency_bucket(perf() - t0)
                    if rec.found:
                        acc = items[t]
                        acc[0] += len(rec.items)
                        acc[1] += 1
                hist[bucket] = hist.get(bucket, 0) + 1
                ops += 1
            except TraversalAnomalyError:
                state.anomalies += 1
            except UseAfterReclaimError:
                state.canaries += 1
        state.ops = ops

    def guarded(body, idx, state):
        def run():
            try:
                body(idx, state)
            except Exception as exc:  # noqa: BLE001 - reported, fails the run
                with errors_lock:
                    errors.append(f"{body.__name__}[{idx}]: {exc!r}")
        return run

    writer_states = [_WriterState() for _ in range(config.writers)]
    reader_states = [_ReaderState() for _ in range(config.readers)]
    writer_threads = [
        threading.Thread(target=guarded(writer_body, i, st), name=f"writer-{i}")
        for i, st in enumerate(writer_states)
    ]
    reader_threads = [
        threading.Thread(target=guarded(reader_body, i, st), name=f"reader-{i}")
        for i, st in enumerate(reader_states)
    ]
    for t in writer_threads + reader_threads:
        t.start()
    t_start = time.perf_counter()
    start_gate.set()
    for t in writer_threads:
        t.join()
    if writer_threads:
        writers_done.set()
    for t in reader_threads:
        t.join()
    elapsed = time.perf_counter() - t_start

    graph.quiesce()

    report = BenchReport(elapsed_secs=elapsed, thread_errors=errors)
    report.update_ops = sum(s.ops for s in writer_states)
    report.inference_ops = sum(s.ops for s in reader_states)
    report.update_throughput = report.update_ops / elapsed if elapsed > 0 else 0.0
    report.anomalies_detected = sum(s.anomalies for s in reader_states)
    report.canary_hits = sum(s.canaries for s in reader_states)

    update_hist = {}
    for s in writer_states:
        _merge_hist(update_hist, s.hist)
    inference_hist = {}
    for s in reader_states:
        _merge_hist(inference_hist, s.hist)
    report.update_p50_ns = _percentile(update_hist, 0.50)
    report.update_p99_ns = _percentile(update_hist, 0.99)
    report.inference_p50_ns = _percentile(inference_hist, 0.50)
    report.inference_p99_ns = _percentile(inference_hist, 0.99)
    for t in THRESHOLDS:
        item_sum = sum(s.items[t][0] for s in reader_states)
        queries = sum(s.items[t][1] for s in reader_states)
        report.items_for_threshold[t] = item_sum / queries if queries else 0.0

    # Conservation before stabilize_all: stabilization recomputes totals and
    # would mask a lost total increment.
    count_sum = 0
    totals_ok = True
    for src, total, pairs in graph.export_sources():
        edge_sum = sum(c for _, c in pairs)
        count_sum += edge_sum
        if edge_sum != total:
            totals_ok = False
    report.conservation_ok = totals_ok and count_sum == report.update_ops

    graph.stabilize_all()
    sorted_ok = True
    for src, _, pairs in graph.export_sources():
        if any(pairs[i][1] < pairs[i + 1][1] for i in range(len(pairs) - 1)):
            sorted_ok = False
            break
    report.sorted_ok = sorted_ok
    return report
