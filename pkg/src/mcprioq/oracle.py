"""Single-threaded reference model for differential testing.

A plain dict of Python lists that replays the exact rules of the concurrent
graph: strict-compare bubbling (ties keep arrival order), floor decay with
zero removal, probabilities accumulated in the same order with the same
float operations. Differential tests can therefore compare results exactly,
floats included, with no tolerance to hide bugs in.

The oracle mirrors the graph's method names so a test can drive both with
one loop.
"""

from .errors import InputError
from .graph import DecayResult, GraphStats, Recommendation
from .ids import validate_node_id


class _OracleSource:
    __slots__ = ("edges", "total")

    def __init__(self):
        self.edges = []  # [dst, count] pairs, non-increasing count order
        self.total = 0


class OracleGraph:
    """Sequential twin of Graph; see module docstring."""

    def __init__(self, decay_factor: float = 0.5):
        if not (0.0 < decay_factor <= 1.0):
            raise InputError(f"decay factor must be in (0, 1], got {decay_factor}")
        self._factor = decay_factor
        self._sources = {}

    def record_transition(self, src: str, dst: str):
        validate_node_id(src)
        validate_node_id(dst)
        source = self._sources.get(src)
        if source is None:
            source = self._sources[src] = _OracleSource()
        edges = source.edges
        pos = -1
        for i, edge in enumerate(edges):
            if edge[0] == dst:
                pos = i
                break
        created = pos < 0
        if created:
            edges.append([dst, 1])
            pos = len(edges) - 1
        else:
            edges[pos][1] += 1
        # Bubble while strictly beating the predecessor; ties never move.
        swaps = 0
        while pos > 0 and edges[pos - 1][1] < edges[pos][1]:
            edges[pos - 1], edges[pos] = edges[pos], edges[pos - 1]
            pos -= 1
            swaps += 1
        source.total += 1
        return created, swaps

    def recommend_top_n(self, src: str, n: int) -> Recommendation:
        validate_node_id(src)
        if n < 0:
            raise InputError(f"n must be >= 0, got {n}")
        source = self._sources.get(src)
        if source is None:
            return Recommendation([], 0.0, False)
        items = []
        cumulative = 0.0
        total = source.total
        if n > 0 and total > 0:
            for dst, count in source.edges:
                p = count / total
                items.append((dst, p))
                cumulative += p
                if len(items) >= n:
                    break
        return Recommendation(items, cumulative, True)

    def recommend_cumulative(self, src: str, threshold: float) -> Recommendation:
        validate_node_id(src)
        if not (0.0 <= threshold <= 1.0):
            raise InputError(f"threshold must be in [0, 1], got {threshold}")
        source = self._sources.get(src)
        if source is None:
            return Recommendation([], 0.0, False)
        items = []
        cumulative = 0.0
        total = source.total
        if threshold > 0.0 and total > 0:
            for dst, count in source.edges:
                p = count / total
                items.append((dst, p))
                cumulative += p
                if cumulative >= threshold:
                    break
        return Recommendation(items, cumulative, True)

    def decay(self, factor=None) -> DecayResult:
        f = self._factor if factor is None else factor
        if not (0.0 < f <= 1.0):
            raise InputError(f"decay factor must be in (0, 1], got {f}")
        removed = 0
        emptied = 0
        for source in self._sources.values():
            had_edges = bool(source.edges)
            survivors = []
            new_total = 0
            for dst, count in source.edges:
                scaled = int(count * f)
                if scaled <= 0:
                    removed += 1
                else:
                    survivors.append([dst, scaled])
                    new_total += scaled
            source.edges = survivors
            source.total = new_total
            if had_edges and not survivors:
                emptied += 1
        return DecayResult(removed, emptied)

    def stats(self) -> GraphStats:
        sources = len(self._sources)
        edges = sum(len(s.edges) for s in self._sources.values())
        transitions = sum(s.total for s in self._sources.values())
        return GraphStats(sources, edges, transitions)

    def export_sources(self):
        """Same shape as Graph.export_sources, for direct comparison."""
        out = [
            (src, source.total, [(dst, count) for dst, count in source.edges])
            for src, source in self._sources.items()
        ]
        out.sort(key=lambda item: item[0])
        return out
