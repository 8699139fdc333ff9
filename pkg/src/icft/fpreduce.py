"""FP-tree construction from the feature tree, FP-growth mining, and
feature reduction from class-bearing frequent patterns.

Item supports come from ``FTree.level_supports`` and transactions from the
F-Tree leaf paths, so the raw instance log is never scanned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .ftree import FTree, Item

__all__ = [
    "Item", "FPNode", "FPTree", "build_fptree", "fp_growth", "min_count_for",
    "score_attributes", "select_features", "FeatureReport", "reduce_features",
    "ftree_transactions",
]


class FPNode:
    __slots__ = ("item", "count", "parent", "children", "link")

    def __init__(self, item, parent=None):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict = {}
        self.link: FPNode | None = None


def min_count_for(minsup: float, n: int) -> int:
    """ceil(minsup * n), robust to float noise such as 0.7 * 10."""
    if not 0 < minsup <= 1:
        raise ValueError("minsup must lie in (0, 1]")
    return max(1, math.ceil(minsup * n - 1e-9))


class FPTree:
    """Prefix tree of support-ordered transactions with a header table.

    ``header`` lists the kept items in insertion order (support descending,
    ties by the item's natural ordering). Each header item owns a node-link
    chain threading every node that carries it.
    """

    def __init__(self, supports: dict, min_count: int, n_transactions: int,
                 exempt: Iterable[Hashable] = ()):
        exempt = set(exempt)
        kept = [it for it, s in supports.items() if s >= min_count or it in exempt]
        kept.sort(key=lambda it: (-supports[it], it))
        self.header = kept
        self.supports = {it: supports[it] for it in kept}
        self.rank = {it: r for r, it in enumerate(kept)}
        self.min_count = min_count
        self.n_transactions = n_transactions
        self.root = FPNode(None)
        self.heads: dict = {}
        self._tails: dict = {}

    def insert(self, items: Iterable, count: int = 1) -> None:
        ordered = sorted((it for it in items if it in self.rank), key=self.rank.__getitem__)
        node = self.root
        for it in ordered:
            child = node.children.get(it)
            if child is None:
                child = node.children[it] = FPNode(it, node)
                if it in self._tails:
                    self._tails[it].link = child
                else:
                    self.heads[it] = child
                self._tails[it] = child
            child.count += count
            node = child

    def chain(self, item):
        node = self.heads.get(item)
        while node is not None:
            yield node
            node = node.link

    def chain_total(self, item) -> int:
        return sum(n.count for n in self.chain(item))

    @property
    def is_empty(self) -> bool:
        return not self.root.children

    def canonical(self) -> tuple:
        """Header table plus a depth-first node list with children in header order."""
        nodes = []

        def rec(node, depth):
            for child in sorted(node.children.values(), key=lambda c: self.rank[c.item]):
                nodes.append((depth, child.item, child.count))
                rec(child, depth + 1)

        rec(self.root, 0)
        return tuple((it, self.supports[it]) for it in self.header), tuple(nodes)

    @classmethod
    def from_weighted(cls, transactions: Sequence[tuple[Sequence, int]], min_count: int,
                      exempt: Iterable[Hashable] = ()) -> "FPTree":
        """Classic two-pass build over (items, multiplicity) pairs."""
        sup: dict = {}
        n = 0
        for items, c in transactions:
            n += c
            for it in set(items):
                sup[it] = sup.get(it, 0) + c
        tree = cls(sup, min_count, n, exempt)
        for items, c in transactions:
            tree.insert(set(items), c)
        return tree


def ftree_transactions(t: FTree) -> list[tuple[tuple[Item, ...], int]]:
    """One weighted transaction per (leaf path, class) pair."""
    out = []
    for path, hist in t.leaves():
        feats = tuple(Item.feature(lvl, v) for lvl, v in enumerate(path))
        for c, n in enumerate(hist):
            if n:
                out.append((feats + (Item.cls_(c),), n))
    return out


def build_fptree(t: FTree, minsup: float = 0.05) -> FPTree:
    if t.instance_total == 0:
        raise ValueError("cannot build an FP-tree from an empty feature tree")
    supports = t.level_supports()
    n = t.instance_total
    classes = [it for it in supports if it.kind == "class"]
    tree = FPTree(supports, min_count_for(minsup, n), n, exempt=classes)
    for items, c in ftree_transactions(t):
        tree.insert(items, c)
    return tree


def fp_growth(fp: FPTree, minsup: float | None = None,
              min_count: int | None = None) -> dict[frozenset, int]:
    """All itemsets with support >= the threshold, with exact supports.

    The threshold defaults to the one the tree was built with; it must not
    be lower, since filtered items are gone from the tree.
    """
    if min_count is None:
        min_count = fp.min_count if minsup is None else min_count_for(minsup, fp.n_transactions)
    if min_count < fp.min_count:
        raise ValueError("threshold is below the one used to build the tree")
    out: dict[frozenset, int] = {}
    _mine(fp, frozenset(), min_count, out)
    return out


def _mine(tree: FPTree, suffix: frozenset, min_count: int, out: dict) -> None:
    for item in reversed(tree.header):
        support = tree.chain_total(item)
        if support < min_count:
            continue
        pattern = suffix | {item}
        out[pattern] = support
        base = []
        for node in tree.chain(item):
            path = []
            p = node.parent
            while p is not None and p.item is not None:
                path.append(p.item)
                p = p.parent
            if path:
                base.append((path, node.count))
        if base:
            cond = FPTree.from_weighted(base, min_count)
            if not cond.is_empty:
                _mine(cond, pattern, min_count, out)


def score_attributes(patterns: dict[frozenset, int], n_features: int,
                     n_transactions: int) -> list[float]:
    """Class-bearing pattern mass per attribute.

    Each frequent itemset holding a class item adds support / N to every
    attribute that has an item in it.
    """
    mass = [0] * n_features  # integer sums keep equal attributes exactly tied
    if n_transactions <= 0:
        return [0.0] * n_features
    for itemset, sup in patterns.items():
        if not any(it.kind == "class" for it in itemset):
            continue
        for a in {it.attribute for it in itemset if it.kind == "feature"}:
            mass[a] += sup
    return [m / n_transactions for m in mass]


def select_features(scores: Sequence[float], top_k: int = 10,
                    floor: float = 0.0) -> tuple[list[int], bool]:
    """Rank attributes by score (ties to the lower id), keep those at or
    above ``floor``, truncate to ``top_k``.

    Returns ``(selected, degenerate)``; when nothing clears the floor the
    single best attribute is kept and ``degenerate`` is True.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    ranked = sorted(range(len(scores)), key=lambda a: (-scores[a], a))
    kept = [a for a in ranked if scores[a] >= floor][:top_k]
    if kept:
        return kept, False
    return ranked[:1], True


@dataclass(frozen=True)
class FeatureReport:
    scores: tuple[float, ...]
    selected: tuple[int, ...]
    degenerate: bool
    minsup: float
    top_k: int
    floor: float = 0.0

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        name = (lambda a: names[a]) if names else (lambda a: a)
        return {
            "scores": {name(a): s for a, s in enumerate(self.scores)},
            "selected": [name(a) for a in self.selected],
            "minsup": self.minsup,
            "top_k": self.top_k,
        }

    def to_json(self, names: Sequence[str] | None = None) -> str:
        return json.dumps(self.to_dict(names), indent=2)


def reduce_features(t: FTree, minsup: float = 0.05, top_k: int = 10,
                    floor: float = 0.0) -> FeatureReport:
    fp = build_fptree(t, minsup)
    patterns = fp_growth(fp)
    scores = score_attributes(patterns, t.n_levels, fp.n_transactions)
    selected, degenerate = select_features(scores, top_k, floor)
    return FeatureReport(tuple(scores), tuple(selected), degenerate, minsup, top_k, floor)
