import io
import random

import pytest

from icft.dataprep import Dataset, Instance
from icft.stream import (METRICS_HEADER, MetricsRow, RunConfig, StreamSpec, emit_metrics,
                         generate_stream, prequential_run, read_metrics, sea_concept,
                         sea_schema)


def test_labels_follow_threshold_per_segment():
    spec = StreamSpec(n=2000, drift_at=(1000,), thresholds=(8.0, 5.0), seed=3)
    data = generate_stream(spec)
    for k, inst in enumerate(data.instances):
        theta = 8.0 if k < 1000 else 5.0
        assert inst.label == sea_concept(*inst.values, theta)
        assert all(0 <= v <= 10 for v in inst.values)


def test_point_five_five_is_true_under_eight():
    assert sea_concept(5.0, 5.0, 8.0) == 1
    assert sea_concept(4.0, 4.0, 8.0) == 0


def test_same_seed_same_stream():
    spec = StreamSpec(n=500, drift_at=(250,), noise=0.1, seed=9)
    assert generate_stream(spec).instances == generate_stream(spec).instances
    other = StreamSpec(n=500, drift_at=(250,), noise=0.1, seed=10)
    assert generate_stream(spec).instances != generate_stream(other).instances


def test_noise_rate_against_noiseless_regeneration():
    noisy = generate_stream(StreamSpec(n=10_000, drift_at=(), thresholds=(8.0,), noise=0.1))
    clean = generate_stream(StreamSpec(n=10_000, drift_at=(), thresholds=(8.0,), noise=0.0))
    assert [i.values for i in noisy.instances] == [i.values for i in clean.instances]
    flips = sum(a.label != b.label for a, b in zip(noisy.instances, clean.instances))
    assert abs(flips / 10_000 - 0.1) <= 0.01


@pytest.mark.parametrize("kwargs", [
    {"drift_at": (5000, 4000), "thresholds": (1, 2, 3)},
    {"drift_at": (20_000,), "thresholds": (1, 2)},
    {"drift_at": (10,), "thresholds": (1,)},
    {"noise": 0.5},
    {"kind": "hyperplane"},
])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        StreamSpec(**kwargs)


def axis_stream(n, seed=0):
    """Separable concept that a single cut represents exactly: x1 > 5."""
    rng = random.Random(seed)
    insts = []
    for _ in range(n):
        a, b = rng.uniform(0, 10), rng.uniform(0, 10)
        insts.append(Instance((a, b), int(a > 5)))
    return Dataset(sea_schema(), insts, {"class": ["0", "1"]})


def test_stationary_separable_reaches_high_accuracy():
    res = prequential_run(axis_stream(3000), RunConfig(warmup=500, report_every=100))
    assert res.rows[-1].window_accuracy >= 0.95


def test_repeated_instance_converges_to_one():
    data = Dataset(sea_schema(), [Instance((1.0, 2.0), 1)] * 800, {"class": ["0", "1"]})
    res = prequential_run(data, RunConfig(warmup=100, report_every=100))
    assert res.rows[-1].cumulative_accuracy == 1.0


def test_warmup_longer_than_stream():
    with pytest.raises(ValueError):
        prequential_run(axis_stream(100), RunConfig(warmup=500))


def test_test_then_train_order_and_metrics_consistency():
    data = generate_stream(StreamSpec(n=3000, drift_at=(1500,), thresholds=(8.0, 5.0), seed=4))
    events = []
    res = prequential_run(data, RunConfig(warmup=300, report_every=50),
                          trace=lambda e, i: events.append((e, i)))
    tested = set()
    for e, i in events:
        if e == "test":
            tested.add(i)
        elif i >= 300:
            assert i in tested  # never trained before tested
    assert sum(res.outcomes) / len(res.outcomes) == pytest.approx(
        res.rows[-1].cumulative_accuracy)
    for a, b in zip(res.rows, res.rows[1:]):
        assert a.model_version <= b.model_version
        assert a.rebuilds_total <= b.rebuilds_total
        assert b.index - a.index == 50
    assert all(0 <= r.window_accuracy <= 1 and 0 <= r.cumulative_accuracy <= 1
               for r in res.rows)


def test_unlabeled_instances_are_classified_not_stored():
    data = axis_stream(800)
    data.instances[600:700] = [Instance(i.values, None) for i in data.instances[600:700]]
    res = prequential_run(data, RunConfig(warmup=200))
    assert res.engine.ftree.instance_total == 700
    assert len(res.outcomes) == 500


def test_emit_metrics_empty_and_rows():
    buf = io.StringIO()
    emit_metrics([], buf)
    assert buf.getvalue() == ",".join(METRICS_HEADER) + "\n"
    rows = [MetricsRow(100 * k, 0.1 * k, 1 / 3, 2, 7, k, k - 1) for k in (1, 2, 3)]
    buf = io.StringIO()
    emit_metrics(rows, buf)
    assert len(buf.getvalue().splitlines()) == 4
    assert read_metrics(buf.getvalue()) == rows


def test_emit_metrics_to_path(tmp_path):
    rows = [MetricsRow(1, 0.5, 0.25, 1, 3, 1, 0)]
    p = tmp_path / "m.csv"
    emit_metrics(rows, p)
    assert p.read_text().splitlines()[0] == ",".join(METRICS_HEADER)
    assert read_metrics(p) == rows


def test_emit_metrics_sink_failure(tmp_path):
    with pytest.raises(OSError):
        emit_metrics([], tmp_path / "missing-dir" / "m.csv")
