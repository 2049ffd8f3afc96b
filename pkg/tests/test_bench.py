import pytest

from mcprioq import Graph, WorkloadConfig, latency_bucket, run_bench
from mcprioq.bench import _percentile
from mcprioq.errors import InputError


@pytest.mark.parametrize(
    "ns,bucket",
    [
        (0, 0),
        (7, 7),
        (99, 99),
        (100, 100),
        (101, 100),
        (999, 990),
        (1001, 1000),
        (18734, 18000),
        (987654321, 980000000),
    ],
)
def test_latency_bucket_two_significant_digits(ns, bucket):
    assert latency_bucket(ns) == bucket


def test_percentile_from_histogram():
    hist = {100: 50, 200: 40, 1000: 10}
    assert _percentile(hist, 0.5) == 100
    assert _percentile(hist, 0.9) == 200
    assert _percentile(hist, 0.99) == 1000
    assert _percentile({}, 0.5) == 0


def test_config_validation():
    good = WorkloadConfig(nodes=10, writers=1, readers=1, duration_secs=0.1)
    good.validate()
    bad = [
        WorkloadConfig(nodes=1, writers=1, readers=1, duration_secs=1),
        WorkloadConfig(nodes=10, writers=-1, readers=1, duration_secs=1),
        WorkloadConfig(nodes=10, writers=1, readers=1, duration_secs=0),
        WorkloadConfig(nodes=10, writers=1, readers=1, duration_secs=1, zipf_s=-1),
        WorkloadConfig(nodes=10, writers=1, readers=1, duration_secs=1, seed=-3),
        WorkloadConfig(nodes=10, writers=1, readers=1, duration_secs=1, max_ops=0),
    ]
    for config in bad:
        with pytest.raises(InputError):
            config.validate()


def test_zero_thread_bench_is_an_empty_pass():
    report = run_bench(
        Graph(), WorkloadConfig(nodes=10, writers=0, readers=0, duration_secs=0.05)
    )
    assert report.passed
    assert report.update_ops == 0
    assert report.inference_ops == 0
    assert report.anomalies_detected == 0
    assert report.items_for_threshold == {0.5: 0.0, 0.9: 0.0, 0.99: 0.0}


def test_short_mixed_bench_passes_invariants():
    graph = Graph()
    config = WorkloadConfig(
        nodes=64, writers=2, readers=2, duration_secs=0.6, zipf_s=1.0, seed=5
    )
    report = run_bench(graph, config)
    assert report.passed, report.format_lines()
    assert report.update_ops > 0
    assert report.inference_ops > 0
    assert report.conservation_ok
    assert report.sorted_ok
    assert report.anomalies_detected == 0
    assert report.canary_hits == 0
    # conservation is literal: the final counts sum to the op count
    total = sum(
        count for _, _, pairs in graph.export_sources() for _, count in pairs
    )
    assert total == report.update_ops


def test_single_writer_fixed_budget_is_deterministic():
    def run(seed):
        graph = Graph()
        config = WorkloadConfig(
            nodes=40,
            writers=1,
            readers=2,
            duration_secs=30.0,  # generous; the budget is what stops it
            seed=seed,
            max_ops=4000,
        )
        report = run_bench(graph, config)
        assert report.passed
        assert report.update_ops == 4000
        return graph.export_sources()

    assert run(9) == run(9)
    assert run(9) != run(10)


def test_report_serialization_round_trip():
    report = run_bench(
        Graph(), WorkloadConfig(nodes=8, writers=1, readers=1, duration_secs=0.1)
    )
    lines = report.format_lines()
    assert any(line.startswith("update_throughput=") for line in lines)
    assert any(line == f"passed={report.passed}" for line in lines)
    d = report.to_dict()
    assert d["passed"] == report.passed
    assert set(d["items_for_threshold"]) == {"0.5", "0.9", "0.99"}


def test_thread_exceptions_fail_the_report():
    class Exploding(Graph):
        def record_transition(self, src, dst):
            raise RuntimeError("boom")

    report = run_bench(
        Exploding(),
        WorkloadConfig(nodes=8, writers=1, readers=0, duration_secs=0.1),
    )
    assert not report.passed
    assert report.thread_errors and "boom" in report.thread_errors[0]
