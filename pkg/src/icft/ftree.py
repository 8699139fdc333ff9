"""Feature tree: a trie with one level per attribute and a class histogram
at each leaf. It is the lossless count store every later stage reads from.

Writes go through a single lock, so a reader always sees the counts of a
whole prefix of the insert sequence. ``snapshot()`` hands out a frozen
copy for long-running consumers such as tree rebuilds.
"""

from __future__ import annotations

import copy
import threading
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .discretize import QuantaMatrix


class Item(NamedTuple):
    kind: str  # "feature" | "class"
    attribute: int  # feature index; -1 for class items
    value: int

    @classmethod
    def feature(cls, attribute: int, value: int) -> "Item":
        return cls("feature", attribute, value)

    @classmethod
    def cls_(cls, value: int) -> "Item":
        return cls("class", -1, value)


class FNode:
    __slots__ = ("value", "count", "children", "class_hist")

    def __init__(self, value=None):
        self.value = value
        self.count = 0
        self.children: dict[int, FNode] = {}
        self.class_hist: list[int] | None = None

    def sorted_children(self):
        return [self.children[k] for k in sorted(self.children)]


class FTree:
    def __init__(self, domains: Sequence[int], n_classes: int):
        if not domains:
            raise ValueError("FTree needs at least one attribute level")
        self.domains = list(domains)
        self.n_classes = n_classes
        self.root = FNode()
        self.sequence_number = 0
        self._lock = threading.Lock()

    @property
    def n_levels(self) -> int:
        return len(self.domains)

    @property
    def instance_total(self) -> int:
        return self.root.count

    def __len__(self):
        return self.root.count

    def insert(self, values: Sequence[int], label: int | None, count: int = 1) -> None:
        if label is None:
            raise ValueError("unlabeled instances are classified, not stored")
        if len(values) != self.n_levels:
            raise ValueError(f"instance arity {len(values)} != {self.n_levels} levels")
        if not 0 <= label < self.n_classes:
            raise ValueError(f"class id {label} outside [0, {self.n_classes})")
        for lvl, v in enumerate(values):
            if v is None or not 0 <= v < self.domains[lvl]:
                raise ValueError(f"level {lvl}: value {v!r} outside domain of size {self.domains[lvl]}")
        with self._lock:
            node = self.root
            node.count += count
            for v in values:
                child = node.children.get(v)
                if child is None:
                    child = node.children[v] = FNode(v)
                child.count += count
                node = child
            if node.class_hist is None:
                node.class_hist = [0] * self.n_classes
            node.class_hist[label] += count
            self.sequence_number += 1

    def snapshot(self) -> "FTree":
        """Independent copy reflecting every insert applied so far."""
        with self._lock:
            root = copy.deepcopy(self.root)
            seq = self.sequence_number
        snap = FTree(self.domains, self.n_classes)
        snap.root = root
        snap.sequence_number = seq
        return snap

    # -- queries -------------------------------------------------------------

    def _walk(self, pattern: Mapping[int, int] | Sequence, visit) -> None:
        """Call ``visit(leaf, path)`` for each leaf matching the bound levels."""
        if not isinstance(pattern, Mapping):
            pattern = {i: v for i, v in enumerate(pattern) if v is not None}
        last = self.n_levels

        def rec(node: FNode, lvl: int, path: list):
            if lvl == last:
                visit(node, path)
                return
            want = pattern.get(lvl)
            if want is not None:
                child = node.children.get(want)
                if child is not None:
                    path.append(want)
                    rec(child, lvl + 1, path)
                    path.pop()
                return
            for k in sorted(node.children):
                path.append(k)
                rec(node.children[k], lvl + 1, path)
                path.pop()

        with self._lock:
            if self.root.count:
                rec(self.root, 0, [])

    def path_count(self, pattern: Sequence) -> int:
        """Instances matching every bound level (``None`` = wildcard)."""
        if len(pattern) != self.n_levels:
            raise ValueError(f"pattern arity {len(pattern)} != {self.n_levels}")
        total = 0

        def visit(leaf, _):
            nonlocal total
            total += leaf.count

        self._walk(pattern, visit)
        return total

    def class_hist(self, constraints: Mapping[int, int] | None = None) -> list[int]:
        hist = [0] * self.n_classes

        def visit(leaf, _):
            for c, n in enumerate(leaf.class_hist):
                hist[c] += n

        self._walk(constraints or {}, visit)
        return hist

    def project_quanta(self, constraints: Mapping[int, int], target: int) -> QuantaMatrix:
        """Class x target-value counts over instances satisfying ``constraints``."""
        constraints = dict(constraints or {})
        if target in constraints:
            raise ValueError(f"target level {target} is also constrained")
        counts = np.zeros((self.n_classes, self.domains[target]), dtype=np.int64)

        def visit(leaf, path):
            counts[:, path[target]] += leaf.class_hist

        self._walk(constraints, visit)
        return QuantaMatrix(counts)

    def project_joint(self, constraints: Mapping[int, int], targets: Sequence[int]) -> QuantaMatrix:
        """Class x joint-configuration counts of ``targets`` (only observed
        configurations get a column)."""
        cols: dict[tuple, np.ndarray] = {}

        def visit(leaf, path):
            key = tuple(path[t] for t in targets)
            acc = cols.get(key)
            if acc is None:
                acc = cols[key] = np.zeros(self.n_classes, dtype=np.int64)
            acc += leaf.class_hist

        self._walk(dict(constraints or {}), visit)
        if not cols:
            return QuantaMatrix(np.zeros((self.n_classes, 1), dtype=np.int64))
        return QuantaMatrix(np.stack([cols[k] for k in sorted(cols)], axis=1))

    def level_supports(self) -> dict[Item, int]:
        """Support of every attribute=value item and every class item in one
        traversal, without touching the raw instance log."""
        sup: dict[Item, int] = {}

        def rec(node: FNode, lvl: int):
            if lvl == self.n_levels:
                for c, n in enumerate(node.class_hist):
                    if n:
                        it = Item.cls_(c)
                        sup[it] = sup.get(it, 0) + n
                return
            for k, child in node.children.items():
                it = Item.feature(lvl, k)
                sup[it] = sup.get(it, 0) + child.count
                rec(child, lvl + 1)

        with self._lock:
            if self.root.count:
                rec(self.root, 0)
        return sup

    def leaves(self) -> Iterator[tuple[tuple[int, ...], list[int]]]:
        """(value path, class histogram) per leaf, in canonical order."""
        out = []
        self._walk({}, lambda leaf, path: out.append((tuple(path), list(leaf.class_hist))))
        return iter(out)

    def stats(self) -> tuple[int, int, int]:
        """(node count including root, depth, instance_total)."""
        nodes = 0
        depth = 0

        def rec(node, d):
            nonlocal nodes, depth
            nodes += 1
            depth = max(depth, d)
            for child in node.children.values():
                rec(child, d + 1)

        with self._lock:
            rec(self.root, 0)
            total = self.root.count
        return nodes, depth, total

    def serialize(self) -> list[tuple]:
        """Depth-first, value-ascending ``(level, value, count, hist)`` list.

        The root is level 0 with value ``None``; ``hist`` is only set on leaves.
        """
        out = []

        def rec(node, lvl):
            hist = tuple(node.class_hist) if node.class_hist is not None else None
            out.append((lvl, node.value, node.count, hist))
            for child in node.sorted_children():
                rec(child, lvl + 1)

        with self._lock:
            rec(self.root, 0)
        return out

    def check_invariants(self) -> None:
        """Raise AssertionError if any count-conservation rule is broken."""
        def rec(node, lvl):
            if lvl == self.n_levels:
                assert not node.children, "leaf has children"
                assert node.class_hist is not None, "leaf without histogram"
                assert sum(node.class_hist) == node.count, "leaf hist != count"
            else:
                assert node.class_hist is None, "internal node carries histogram"
                assert sum(c.count for c in node.children.values()) == node.count, \
                    f"count not conserved at level {lvl}"
            if node is not self.root:
                assert node.count >= 1, "empty node"
            for child in node.children.values():
                rec(child, lvl + 1)

        with self._lock:
            rec(self.root, 0)
