"""Synthetic drifting streams and the prequential (test-then-train) harness."""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .classifier import DriftPolicy, Engine
from .dataprep import (CATEGORICAL, NUMERIC, Attribute, Dataset, ImputationPolicy,
                       Instance, Schema, fill_instance, fill_values)
from .discretize import apply_scheme, domain_sizes, fit_scheme
from .ftree import FTree

METRICS_HEADER = ["index", "window_accuracy", "cumulative_accuracy", "n_features_active",
                  "tree_nodes", "model_version", "rebuilds_total"]


@dataclass(frozen=True)
class StreamSpec:
    n: int = 10_000
    drift_at: tuple[int, ...] = (5000,)
    thresholds: tuple[float, ...] = (8.0, 5.0)
    noise: float = 0.0
    seed: int = 42
    kind: str = "sea"

    def __post_init__(self):
        if self.kind != "sea":
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        d = list(self.drift_at)
        if any(b <= a for a, b in zip(d, d[1:])) or any(not 0 < i < self.n for i in d):
            raise ValueError("drift indices must be strictly increasing and inside (0, n)")
        if len(self.thresholds) != len(d) + 1:
            raise ValueError(f"need {len(d) + 1} thresholds, got {len(self.thresholds)}")
        if not 0 <= self.noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")


def sea_schema() -> Schema:
    return Schema((Attribute("x1", NUMERIC), Attribute("x2", NUMERIC),
                   Attribute("class", CATEGORICAL)), "class")


def sea_concept(x1: float, x2: float, theta: float) -> int:
    return int(x1 + x2 > theta)


def generate_stream(spec: StreamSpec) -> Dataset:
    """Two uniform attributes on [0, 10]; class 1 iff x1 + x2 > theta of the
    current segment, flipped with probability ``noise``.

    The flip draws are taken whatever the noise level, so two specs that
    differ only in noise share their attribute values.
    """
    rng = np.random.default_rng(spec.seed)
    xs = rng.uniform(0.0, 10.0, size=(spec.n, 2))
    flips = rng.random(spec.n) < spec.noise
    segment = np.searchsorted(np.asarray(spec.drift_at), np.arange(spec.n), side="right")
    theta = np.asarray(spec.thresholds)[segment]
    labels = (xs.sum(axis=1) > theta) ^ flips
    instances = [Instance((float(a), float(b)), int(y)) for (a, b), y in zip(xs, labels)]
    return Dataset(sea_schema(), instances, {"class": ["0", "1"]})


class MetricsRow(NamedTuple):
    index: int
    window_accuracy: float
    cumulative_accuracy: float
    n_features_active: int
    tree_nodes: int
    model_version: int
    rebuilds_total: int


@dataclass
class RunConfig:
    minsup: float = 0.05
    top_k: int = 10
    floor: float = 0.0
    policy: DriftPolicy = field(default_factory=DriftPolicy)
    method: str = "mcaim"
    epsilon: float = 0.01
    warmup: int = 500
    report_every: int = 100
    accuracy_window: int | None = None  # defaults to report_every
    rebuilds: bool = True
    background: bool = False


@dataclass
class RunResult:
    rows: list[MetricsRow]
    engine: Engine
    scheme: object
    outcomes: list[bool] = field(default_factory=list)
    rebuild_log: list[tuple[int, int]] = field(default_factory=list)  # (index, version)


def prequential_run(data: Dataset, config: RunConfig = RunConfig(),
                    trace: Callable[[str, int], None] | None = None,
                    scheme=None) -> RunResult:
    """Warm up on the first ``config.warmup`` instances, then classify each
    instance before learning from it.

    ``trace(event, index)`` is called with "test" and "train" events when
    given. A pre-fitted ``scheme`` skips discretization of the warmup.
    """
    schema = data.schema
    insts = data.instances
    if config.warmup > len(insts):
        raise ValueError(f"warmup {config.warmup} exceeds stream length {len(insts)}")
    warm = [i for i in insts[:config.warmup] if i.label is not None]
    if not warm:
        raise ValueError("warmup segment holds no labeled instances")

    fills = fill_values(warm, schema, ImputationPolicy())
    warm = [fill_instance(i, fills) for i in warm]
    if scheme is None:
        scheme = fit_scheme(warm, schema, config.method, config.epsilon)
    ftree = FTree(domain_sizes(schema, scheme, data.categories), len(data.classes))
    engine = Engine(ftree, config.policy, config.minsup, config.top_k, config.floor,
                    rebuilds=config.rebuilds, background=config.background)

    def discrete(inst: Instance) -> Instance:
        return apply_scheme(fill_instance(inst, fills), scheme, schema)

    for k, inst in enumerate(warm):
        engine.ingest(discrete(inst).values, inst.label)
        if trace:
            trace("train", k)
    engine.initial_build()

    window = deque(maxlen=config.accuracy_window or config.report_every)
    result = RunResult([], engine, scheme)
    correct = tested = 0
    last_version = engine.model.version
    try:
        for idx in range(config.warmup, len(insts)):
            inst = insts[idx]
            x = discrete(inst).values
            pred = engine.classify(x)
            if trace:
                trace("test", idx)
            if inst.label is not None:
                ok = pred.label == inst.label
                window.append(ok)
                result.outcomes.append(ok)
                correct += ok
                tested += 1
                engine.record_outcome(pred, x, inst.label)
                if trace:
                    trace("train", idx)
            m = engine.model
            if m.version != last_version:
                result.rebuild_log.append((idx + 1, m.version))
                last_version = m.version
            if (idx + 1 - config.warmup) % config.report_every == 0:
                result.rows.append(MetricsRow(
                    idx + 1,
                    sum(window) / len(window) if window else 0.0,
                    correct / tested if tested else 0.0,
                    len(m.features),
                    m.n_nodes,
                    m.version,
                    engine.rebuilds_total,
                ))
    finally:
        engine.wait()
        engine.close()
    return result


def emit_metrics(rows: Sequence[MetricsRow], sink) -> None:
    """Write rows as CSV to a path or an open text file."""
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            emit_metrics(rows, fh)
        return
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in rows:
        w.writerow([r.index, repr(float(r.window_accuracy)), repr(float(r.cumulative_accuracy)),
                    r.n_features_active, r.tree_nodes, r.model_version, r.rebuilds_total])


def read_metrics(source) -> list[MetricsRow]:
    if isinstance(source, str) and "\n" in source:
        source = io.StringIO(source)
    if hasattr(source, "read"):
        reader = csv.reader(source)
    else:
        with open(source, newline="", encoding="utf-8") as fh:
            return read_metrics(io.StringIO(fh.read()))
    header = next(reader)
    if header != METRICS_HEADER:
        raise ValueError(f"unexpected metrics header {header}")
    return [MetricsRow(int(r[0]), float(r[1]), float(r[2]), int(r[3]), int(r[4]), int(r[5]),
                       int(r[6])) for r in reader if r]
