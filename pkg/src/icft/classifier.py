"""Incremental decision tree over the reduced feature set.

Splits are chosen by CAIR with CAIM as tie-break, from exact counts
projected out of the feature tree. Every node keeps an error monitor; a
node whose recent error rate jumps above its history is marked dirty and
its subtree is rebuilt in the background, then published by swapping the
whole model reference.
"""

from __future__ import annotations

import copy
import json
import logging
import threading
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .discretize import QuantaMatrix, caim_score, cair_score
from .ftree import FTree
from .fpreduce import FeatureReport, reduce_features

log = logging.getLogger(__name__)

CLASSIFIED = "classified"
UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class DriftPolicy:
    window: int = 200
    delta: float = 0.15
    min_leaf: int = 5
    rebuild_every: int = 500

    def __post_init__(self):
        if self.window < 10:
            raise ValueError("window must be >= 10")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.rebuild_every < 1:
            raise ValueError("rebuild_every must be >= 1")


def split_score(q: QuantaMatrix) -> tuple[float, float]:
    """(CAIR, CAIM) of a class x value table; (0, 0) when fewer than two
    cells are non-zero."""
    if int((q.counts > 0).sum()) < 2:
        return 0.0, 0.0
    return cair_score(q), caim_score(q)


SCORE_TOL = 1e-12


def better_split(score: tuple[float, float], incumbent: tuple[float, float]) -> bool:
    """Lexicographic (CAIR, CAIM) comparison where differences within
    ``SCORE_TOL`` count as ties, so float noise cannot override the
    lower-attribute-id rule."""
    for new, old in zip(score, incumbent):
        if new > old + SCORE_TOL:
            return True
        if new < old - SCORE_TOL:
            return False
    return False


def majority(hist: Sequence[int]) -> int:
    best = max(hist)
    return next(c for c, n in enumerate(hist) if n == best)


class DNode:
    def __init__(self, hist: Sequence[int], path: tuple = (), attribute: int | None = None):
        self.hist = list(hist)
        self.path = path  # ((attribute, value), ...) from the root
        self.attribute = attribute
        self.children: dict[int, DNode] = {}
        self.n_seen = 0
        self.n_err = 0
        self.recent: deque = deque()
        self.recent_err = 0
        self.dirty = False

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    @property
    def label(self) -> int:
        return majority(self.hist)

    @property
    def mass(self) -> int:
        return sum(self.hist)

    def observe(self, error: bool, policy: DriftPolicy) -> bool:
        """Update the monitor; return True if this outcome made the node dirty."""
        self.n_seen += 1
        self.n_err += error
        self.recent.append(error)
        self.recent_err += error
        if len(self.recent) > policy.window:
            self.recent_err -= self.recent.popleft()
        # the baseline needs its own W outcomes before the trailing window
        if self.dirty or self.n_seen < 2 * policy.window:
            return False
        before = self.n_seen - policy.window
        base = (self.n_err - self.recent_err) / before
        if self.recent_err / policy.window >= base + policy.delta:
            self.dirty = True
            return True
        return False

    def walk(self):
        yield self
        for v in sorted(self.children):
            yield from self.children[v].walk()

    def to_dict(self, names=None) -> dict:
        d = {"hist": list(self.hist), "class": self.label}
        if not self.is_leaf:
            d["attribute"] = names[self.attribute] if names else self.attribute
            d["branches"] = [{"value": v, "node": self.children[v].to_dict(names)}
                             for v in sorted(self.children)]
        return d


@dataclass
class Model:
    version: int
    root: DNode
    features: tuple[int, ...]
    built_at: int

    def nodes(self):
        return self.root.walk()

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def depth(self) -> int:
        return max(len(n.path) for n in self.nodes())

    def dirty_nodes(self) -> list[DNode]:
        return [n for n in self.nodes() if n.dirty]

    def find(self, path) -> DNode:
        node = self.root
        for attr, v in path:
            if node.attribute != attr:
                raise KeyError(f"path {path} diverges from the model at {node.path}")
            node = node.children[v]
        return node

    def to_dict(self, names=None) -> dict:
        return {
            "version": self.version,
            "built_at": self.built_at,
            "features": [names[a] if names else a for a in self.features],
            "root": self.root.to_dict(names),
        }

    def canonical(self) -> str:
        """Structure-only serialization (no version, no counters)."""
        return json.dumps(self.root.to_dict(), sort_keys=True)

    def dump(self, names=None) -> str:
        return json.dumps(self.to_dict(names), indent=2, sort_keys=True)


def _grow(t: FTree, path: tuple, unused: list[int], policy: DriftPolicy) -> DNode:
    constraints = dict(path)
    hist = t.class_hist(constraints)
    node = DNode(hist, path)
    if sum(1 for n in hist if n) <= 1 or not unused or sum(hist) < policy.min_leaf:
        return node

    best = None
    for a in unused:
        q = t.project_quanta(constraints, a)
        if int((q.col_totals > 0).sum()) < 2:
            continue  # constant at this node: a split cannot separate anything
        score = split_score(q)
        if best is None or better_split(score, best[0]):
            best = (score, a, q)
    if best is None:
        return node
    (primary, _), attr, q = best
    if primary <= SCORE_TOL:
        # no single attribute helps; split only if the remaining attributes
        # jointly carry class information (XOR-like interactions)
        joint = t.project_joint(constraints, unused)
        if int((joint.counts > 0).sum()) < 2 or cair_score(joint) <= 1e-12:
            return node

    node.attribute = attr
    rest = [a for a in unused if a != attr]
    for v, total in enumerate(q.col_totals):
        if total:
            node.children[v] = _grow(t, path + ((attr, v),), rest, policy)
    return node


def build_tree(t: FTree, features: Sequence[int], policy: DriftPolicy = DriftPolicy(),
               version: int = 1) -> Model:
    if t.instance_total == 0:
        raise ValueError("cannot build a tree from an empty feature tree")
    if not features:
        raise ValueError("feature set is empty")
    feats = tuple(sorted(features))
    return Model(version, _grow(t, (), list(feats), policy), feats, t.sequence_number)


def rebuild_subtree(m: Model, path, t: FTree, features: Sequence[int] | None = None,
                    policy: DriftPolicy = DriftPolicy()) -> Model:
    """New model (version + 1) whose subtree at ``path`` is regrown from ``t``.

    ``path`` is a node or its ((attribute, value), ...) path. The input
    model is left untouched.
    """
    if isinstance(path, DNode):
        path = path.path
    path = tuple(path)
    feats = tuple(sorted(features)) if features is not None else m.features
    if t.sequence_number < m.built_at:
        raise ValueError("snapshot is older than the model")
    if not path:
        return Model(m.version + 1, _grow(t, (), list(feats), policy), feats, t.sequence_number)
    new = copy.deepcopy(m)
    parent = new.find(path[:-1])
    used = {a for a, _ in path}
    parent.children[path[-1][1]] = _grow(t, path, [a for a in feats if a not in used], policy)
    new.version = m.version + 1
    new.built_at = t.sequence_number
    new.features = feats
    return new


class Prediction(NamedTuple):
    label: int
    confidence: float
    outcome: str
    version: int
    path: tuple  # DNodes traversed, root first


def classify(m: Model, x: Sequence[int]) -> Prediction:
    node = m.root
    trail = [node]
    outcome = CLASSIFIED
    while not node.is_leaf:
        child = node.children.get(x[node.attribute])
        if child is None:
            outcome = UNCLASSIFIED
            break
        node = child
        trail.append(node)
    label = node.label
    mass = node.mass
    conf = node.hist[label] / mass if mass else 0.0
    return Prediction(label, conf, outcome, m.version, tuple(trail))


class Engine:
    """Serving model plus background maintenance.

    ``classify`` reads the current model reference exactly once, so each
    prediction comes from a single version. Maintenance (F-Tree ingest,
    feature re-scoring, subtree rebuilds) publishes through ``swap_model``.
    With ``background=True`` rebuilds run on a worker thread, at most one in
    flight; otherwise they run inline, which keeps runs reproducible.
    """

    def __init__(self, ftree: FTree, policy: DriftPolicy = DriftPolicy(),
                 minsup: float = 0.05, top_k: int = 10, floor: float = 0.0,
                 rebuilds: bool = True, background: bool = False):
        self.ftree = ftree
        self.policy = policy
        self.minsup, self.top_k, self.floor = minsup, top_k, floor
        self.rebuilds = rebuilds
        self.background = background
        self.report: FeatureReport | None = None
        self.rebuilds_total = 0
        self._model: Model | None = None
        self._swap_lock = threading.Lock()
        self._monitor_lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=1) if background else None
        self._inflight: Future | None = None
        self._since_check = 0

    # -- serving path ----------------------------------------------------------

    @property
    def model(self) -> Model | None:
        return self._model

    def classify(self, x: Sequence[int]) -> Prediction:
        m = self._model
        if m is None:
            raise RuntimeError("no model has been built yet")
        return classify(m, x)

    def swap_model(self, new: Model) -> bool:
        """Publish ``new`` if it is newer than the serving model."""
        with self._swap_lock:
            cur = self._model
            if cur is not None and new.version <= cur.version:
                log.debug("stale swap rejected: %d <= %d", new.version, cur.version)
                return False
            self._model = new
            return True

    # -- maintenance -----------------------------------------------------------

    def ingest(self, x: Sequence[int], label: int) -> None:
        self.ftree.insert(x, label)

    def initial_build(self) -> Model:
        snap = self.ftree.snapshot()
        self.report = reduce_features(snap, self.minsup, self.top_k, self.floor)
        version = self._model.version + 1 if self._model else 1
        m = build_tree(snap, self.report.selected, self.policy, version)
        self.swap_model(m)
        return m

    def record_outcome(self, pred: Prediction, x: Sequence[int], truth: int) -> list[DNode]:
        """Update monitors on the prediction's path, store ``x`` in the
        F-Tree, and schedule a rebuild when a node turns dirty."""
        error = pred.outcome == UNCLASSIFIED or pred.label != truth
        with self._monitor_lock:
            newly = [n for n in pred.path if n.observe(error, self.policy)]
        self.ingest(x, truth)
        self._since_check += 1
        if self.rebuilds:
            periodic = self._since_check >= self.policy.rebuild_every
            if periodic:
                self._since_check = 0
            if newly or periodic:
                self._request_rebuild()
        return newly

    def _request_rebuild(self) -> None:
        if self._inflight is not None and not self._inflight.done():
            return
        m = self._model
        if m is None or not m.dirty_nodes():
            return
        if self._pool is None:
            self._rebuild(m)
        else:
            self._inflight = self._pool.submit(self._rebuild, m)

    def _rebuild(self, m: Model) -> Model | None:
        with self._monitor_lock:
            m = copy.deepcopy(m)
        target = min(m.dirty_nodes(), key=lambda n: len(n.path))
        snap = self.ftree.snapshot()
        self.report = reduce_features(snap, self.minsup, self.top_k, self.floor)
        feats = tuple(sorted(self.report.selected))
        path = target.path if feats == m.features else ()
        new = rebuild_subtree(m, path, snap, feats, self.policy)
        if self.swap_model(new):
            self.rebuilds_total += 1
            log.debug("rebuilt %s -> version %d", path or "root", new.version)
            return new
        return None

    def rebuild_now(self, path=()) -> Model:
        """Synchronously regrow the subtree at ``path`` and swap it in."""
        m = self._model
        new = rebuild_subtree(m, path, self.ftree.snapshot(), m.features, self.policy)
        self.swap_model(new)
        self.rebuilds_total += 1
        return new

    def wait(self) -> None:
        if self._inflight is not None:
            self._inflight.result()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)


def swap_model(engine: Engine, new: Model) -> bool:
    return engine.swap_model(new)
