"""Supervised discretization of numeric attributes.

Quanta matrices are class x interval count tables. CAIM rewards intervals
dominated by one class; CAIR is the mutual information of the table
divided by its joint entropy. ``mcaim_discretize`` runs greedy CAIM, keeps
adding cuts while CAIR improves, then merges intervals back under a CAIR
tolerance.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataprep import NUMERIC, Dataset, Instance, Schema


class DegenerateJoint(ValueError):
    """Raised by ``cair_score`` when the joint entropy is zero."""


@dataclass(frozen=True)
class QuantaMatrix:
    counts: np.ndarray  # S x n, rows = classes, columns = intervals

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ValueError(f"quanta matrix must be 2-D with >= 1 column, got {c.shape}")
        if (c < 0).any():
            raise ValueError("quanta counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def empty(self) -> bool:
        return self.total == 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def tolist(self) -> list[list[int]]:
        return self.counts.tolist()


def interval_of(cuts: Sequence[float], value: float) -> int:
    """Interval id of ``value``; intervals are (cut[r-1], cut[r]]."""
    return bisect_left(cuts, value)


def build_quanta(values: Sequence[float], labels: Sequence[int], cuts: Sequence[float],
                 n_classes: int | None = None) -> QuantaMatrix:
    if len(values) != len(labels):
        raise ValueError(f"length mismatch: {len(values)} values, {len(labels)} labels")
    if not len(values):
        raise ValueError("build_quanta needs at least one value")
    if n_classes is None:
        n_classes = max(labels) + 1
    cuts = list(cuts)
    counts = np.zeros((n_classes, len(cuts) + 1), dtype=np.int64)
    for v, y in zip(values, labels):
        counts[y, interval_of(cuts, v)] += 1
    return QuantaMatrix(counts)


def _counts(q) -> np.ndarray:
    return q.counts if isinstance(q, QuantaMatrix) else np.asarray(q, dtype=np.int64)


def caim_score(q) -> float:
    """(1/n) * sum over columns of max_r**2 / M_+r; empty columns add 0."""
    c = _counts(q)
    n = c.shape[1]
    tot = c.sum(axis=0)
    mx = c.max(axis=0)
    mass = tot > 0
    return float((mx[mass].astype(float) ** 2 / tot[mass]).sum() / n)


def cair_score(q) -> float:
    c = _counts(q).astype(float)
    N = c.sum()
    if N <= 0:
        raise DegenerateJoint("empty quanta matrix")
    p = c / N
    nz = p > 0
    h = -float((p[nz] * np.log2(p[nz])).sum())
    if h <= 0:
        raise DegenerateJoint("joint entropy is zero (single non-zero cell)")
    pr = p.sum(axis=1, keepdims=True)
    pc = p.sum(axis=0, keepdims=True)
    outer = (pr * pc)[nz]
    info = float((p[nz] * np.log2(p[nz] / outer)).sum())
    # clamp rounding noise; the ratio is bounded by construction
    return min(max(info / h, 0.0), 1.0)


class _SortedColumn:
    """Cumulative per-class counts over the sorted distinct values of a column."""

    def __init__(self, values: Sequence[float], labels: Sequence[int]):
        if len(values) != len(labels):
            raise ValueError("values and labels differ in length")
        classes = sorted(set(labels))
        cmap = {c: i for i, c in enumerate(classes)}
        self.n_classes = len(classes)
        distinct = sorted(set(float(v) for v in values))
        vpos = {v: i for i, v in enumerate(distinct)}
        tally = np.zeros((len(distinct), self.n_classes), dtype=np.int64)
        for v, y in zip(values, labels):
            tally[vpos[float(v)], cmap[y]] += 1
        self.distinct = distinct
        self.cum = np.cumsum(tally, axis=0)
        self.candidates = []
        for a, b in zip(distinct, distinct[1:]):
            mid = a + (b - a) / 2
            self.candidates.append(mid if a <= mid < b else a)

    def quanta(self, cut_idx: Sequence[int]) -> np.ndarray:
        """S x n matrix for candidate indices ``cut_idx`` (sorted ascending)."""
        bounds = list(cut_idx) + [len(self.distinct) - 1]
        cols = self.cum[bounds]
        cols[1:] = cols[1:] - self.cum[bounds[:-1]]
        return cols.T

    def cuts(self, cut_idx: Sequence[int]) -> list[float]:
        return [self.candidates[k] for k in sorted(cut_idx)]


def _best_addition(col: _SortedColumn, chosen: list[int], allowed=None):
    """Candidate maximizing CAIM when added; ties go to the smallest cut."""
    best_k, best_s = None, -math.inf
    for k in range(len(col.candidates)):
        if k in chosen or (allowed is not None and not allowed(k)):
            continue
        s = caim_score(col.quanta(sorted(chosen + [k])))
        if s > best_s:
            best_k, best_s = k, s
    return best_k, best_s


def _greedy_caim(col: _SortedColumn) -> list[int]:
    chosen: list[int] = []
    global_caim = 0.0
    while len(chosen) < len(col.candidates):
        k, s = _best_addition(col, chosen)
        if s > global_caim or len(chosen) + 1 < col.n_classes:
            chosen.append(k)
            global_caim = s
        else:
            break
    return sorted(chosen)


def _informative(values, labels) -> bool:
    return len(set(values)) >= 2 and len(set(labels)) >= 2


def caim_discretize(values: Sequence[float], labels: Sequence[int]) -> list[float]:
    """Greedy CAIM cut selection. Returns ``[]`` for a constant column
    or a single-class column."""
    if len(values) != len(labels):
        raise ValueError("values and labels differ in length")
    if not _informative(values, labels):
        return []
    col = _SortedColumn(values, labels)
    return col.cuts(_greedy_caim(col))


def merge_intervals(values: Sequence[float], labels: Sequence[int], cuts: Sequence[float],
                    epsilon: float = 0.01) -> list[float]:
    """Remove cuts one at a time, always the one whose removal leaves the
    highest CAIR, while CAIR stays >= (1 - epsilon) * its previous value and
    more than S intervals remain."""
    cuts = list(cuts)
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cuts must be strictly increasing")
    classes = sorted(set(labels))
    if len(classes) < 2 or not cuts:
        return cuts
    cmap = {c: i for i, c in enumerate(classes)}
    ys = [cmap[y] for y in labels]
    S = len(classes)
    current = cair_score(build_quanta(values, ys, cuts, S))
    while len(cuts) + 1 > S:
        best_i, best_s = None, -math.inf
        for i in range(len(cuts)):
            trial = cuts[:i] + cuts[i + 1:]
            s = cair_score(build_quanta(values, ys, trial, S))
            if s > best_s:
                best_i, best_s = i, s
        if best_s < (1 - epsilon) * current - 1e-12:
            break
        del cuts[best_i]
        current = best_s
    return cuts


def mcaim_discretize(values: Sequence[float], labels: Sequence[int], epsilon: float = 0.01,
                     cap_factor: int = 4) -> list[float]:
    if not 0 <= epsilon <= 0.1:
        raise ValueError("epsilon must lie in [0, 0.1]")
    if len(values) != len(labels):
        raise ValueError("values and labels differ in length")
    if not _informative(values, labels):
        return []
    col = _SortedColumn(values, labels)
    chosen = _greedy_caim(col)
    cap = min(len(col.distinct), cap_factor * col.n_classes)
    current = cair_score(col.quanta(chosen))
    while len(chosen) + 1 < cap:
        def raises_cair(k, chosen=chosen, current=current):
            return cair_score(col.quanta(sorted(chosen + [k]))) > current + 1e-12
        k, _ = _best_addition(col, chosen, raises_cair)
        if k is None:
            break
        chosen = sorted(chosen + [k])
        current = cair_score(col.quanta(chosen))
    return merge_intervals(values, labels, col.cuts(chosen), epsilon)


@dataclass
class DiscretizationScheme:
    cuts: dict[str, list[float]]
    flags: dict[str, str] = field(default_factory=dict)

    def n_intervals(self, attribute: str) -> int:
        return len(self.cuts[attribute]) + 1

    def interval(self, attribute: str, value: float) -> int:
        return interval_of(self.cuts[attribute], value)

    def to_json(self) -> str:
        doc = [{"attribute": a, "cuts": [float(c) for c in cs]} for a, cs in self.cuts.items()]
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DiscretizationScheme":
        doc = json.loads(text)
        cuts = {}
        for entry in doc:
            cs = [float(c) for c in entry["cuts"]]
            if any(b <= a for a, b in zip(cs, cs[1:])):
                raise ValueError(f"cuts for {entry['attribute']!r} are not strictly increasing")
            cuts[entry["attribute"]] = cs
        return cls(cuts)


def fit_scheme(data: Dataset | Sequence[Instance], schema: Schema | None = None,
               method: str = "mcaim", epsilon: float = 0.01) -> DiscretizationScheme:
    """Fit cut points for every numeric feature from labeled, complete cells."""
    if isinstance(data, Dataset):
        schema, instances = data.schema, data.instances
    else:
        instances = list(data)
    scheme = DiscretizationScheme({})
    for j, a in enumerate(schema.features):
        if a.kind != NUMERIC:
            continue
        pairs = [(inst.values[j], inst.label) for inst in instances
                 if inst.values[j] is not None and inst.label is not None]
        vals = [p[0] for p in pairs]
        labs = [p[1] for p in pairs]
        if method == "caim":
            cuts = caim_discretize(vals, labs)
        elif method == "mcaim":
            cuts = mcaim_discretize(vals, labs, epsilon)
        else:
            raise ValueError(f"unknown discretization method {method!r}")
        if not cuts:
            scheme.flags[a.name] = "NoInformation"
        scheme.cuts[a.name] = cuts
    return scheme


def domain_sizes(schema: Schema, scheme: DiscretizationScheme,
                 categories: dict[str, list[str]]) -> list[int]:
    """Number of discrete values per feature after discretization."""
    sizes = []
    for a in schema.features:
        if a.kind == NUMERIC:
            sizes.append(scheme.n_intervals(a.name))
        else:
            sizes.append(len(categories[a.name]))
    return sizes


def apply_scheme(instance: Instance, scheme: DiscretizationScheme, schema: Schema) -> Instance:
    """Replace numeric slots by interval ids; categorical slots pass through."""
    vals = []
    for v, a in zip(instance.values, schema.features):
        if a.kind == NUMERIC and v is not None:
            vals.append(scheme.interval(a.name, v))
        else:
            vals.append(v)
    return Instance(tuple(vals), instance.label)
