"""Schema parsing, CSV I/O, missing-value imputation and normalization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import NamedTuple, Sequence

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class SchemaError(ValueError):
    pass


class DuplicateAttribute(SchemaError):
    pass


class MissingClassAttribute(SchemaError):
    pass


class ClassMustBeCategorical(SchemaError):
    pass


class AllMissingColumn(ValueError):
    def __init__(self, attribute: str):
        super().__init__(f"column {attribute!r} has no non-missing values")
        self.attribute = attribute


class DegenerateColumn(ValueError):
    pass


class Attribute(NamedTuple):
    name: str
    kind: str


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    class_attribute: str
    missing_token: str = "?"

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        seen = set()
        for n in names:
            if n in seen:
                raise DuplicateAttribute(f"attribute {n!r} declared twice")
            seen.add(n)
        for a in self.attributes:
            if a.kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"attribute {a.name!r} has unknown kind {a.kind!r}")
        if self.class_attribute not in seen:
            raise MissingClassAttribute(
                f"class attribute {self.class_attribute!r} is not declared")
        if self.class_kind != CATEGORICAL:
            raise ClassMustBeCategorical(
                f"class attribute {self.class_attribute!r} must be categorical")
        if len(self.attributes) < 2:
            raise SchemaError("schema needs at least one non-class attribute")

    @property
    def class_kind(self) -> str:
        return next(a.kind for a in self.attributes if a.name == self.class_attribute)

    @property
    def features(self) -> tuple[Attribute, ...]:
        """Non-class attributes in document order."""
        return tuple(a for a in self.attributes if a.name != self.class_attribute)

    @property
    def feature_names(self) -> list[str]:
        return [a.name for a in self.features]

    def to_dict(self) -> dict:
        return {
            "attributes": [{"name": a.name, "kind": a.kind} for a in self.attributes],
            "class": self.class_attribute,
            "missing_token": self.missing_token,
        }


def parse_schema(raw) -> Schema:
    """Build a Schema from a parsed JSON document (dict) or a JSON string."""
    if isinstance(raw, (str, bytes)):
        raw = json.loads(raw)
    try:
        attrs = tuple(Attribute(str(a["name"]), str(a["kind"])) for a in raw["attributes"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc
    if "class" not in raw:
        raise MissingClassAttribute("schema document has no 'class' entry")
    return Schema(attrs, str(raw["class"]), str(raw.get("missing_token", "?")))


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(json.load(fh))


class Instance(NamedTuple):
    """Feature values aligned to ``Schema.features`` plus a class label.

    Numeric slots hold floats, categorical slots hold category ids; ``None``
    marks a missing cell. ``label`` is ``None`` for unlabeled instances.
    """
    values: tuple
    label: int | None


@dataclass
class Dataset:
    schema: Schema
    instances: list[Instance]
    # category strings per categorical attribute (class included); id = list index
    categories: dict[str, list[str]] = field(default_factory=dict)

    @property
    def classes(self) -> list[str]:
        return self.categories[self.schema.class_attribute]

    def column(self, j: int) -> list:
        return [inst.values[j] for inst in self.instances]

    def labels(self) -> list:
        return [inst.label for inst in self.instances]


def read_csv(path, schema: Schema, categories: dict[str, list[str]] | None = None) -> Dataset:
    """Read an RFC-4180 CSV whose header matches the schema names.

    Category ids are assigned in sorted string order unless ``categories``
    fixes the mapping (unknown strings are then appended).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty CSV")
        rows = [r for r in reader if r]
    return _from_rows(header, rows, schema, categories, source=str(path))


def _from_rows(header, rows, schema: Schema, categories, source="<rows>") -> Dataset:
    expected = [a.name for a in schema.attributes]
    if sorted(header) != sorted(expected):
        raise SchemaError(f"{source}: header {header} does not match schema {expected}")
    pos = {name: header.index(name) for name in expected}
    miss = schema.missing_token

    cats = {k: list(v) for k, v in (categories or {}).items()}
    for a in schema.attributes:
        if a.kind == CATEGORICAL and a.name not in cats:
            seen = sorted({r[pos[a.name]] for r in rows if r[pos[a.name]] != miss})
            cats[a.name] = seen

    def encode(a: Attribute, cell: str):
        if cell == miss:
            return None
        if a.kind == NUMERIC:
            v = float(cell)
            if not math.isfinite(v):
                raise ValueError(f"{source}: non-finite value {cell!r} in {a.name!r}")
            return v
        ids = cats[a.name]
        if cell not in ids:
            ids.append(cell)
        return ids.index(cell)

    instances = []
    feats = schema.features
    cls = next(a for a in schema.attributes if a.name == schema.class_attribute)
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"{source}: row has {len(r)} cells, expected {len(header)}")
        values = tuple(encode(a, r[pos[a.name]]) for a in feats)
        instances.append(Instance(values, encode(cls, r[pos[cls.name]])))
    return Dataset(schema, instances, cats)


def write_csv(path, data: Dataset) -> None:
    schema = data.schema
    feats = schema.features
    fidx = {a.name: j for j, a in enumerate(feats)}

    def decode(a: Attribute, v):
        if v is None:
            return schema.missing_token
        if a.kind == NUMERIC:
            return repr(float(v))
        return data.categories[a.name][v]

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([a.name for a in schema.attributes])
        for inst in data.instances:
            row = []
            for a in schema.attributes:
                v = inst.label if a.name == schema.class_attribute else inst.values[fidx[a.name]]
                row.append(decode(a, v))
            w.writerow(row)


# -- column statistics -------------------------------------------------------

def skewness(column: Sequence) -> float:
    """Population skewness g1 = m3 / m2**1.5 over the non-missing values."""
    xs = [float(v) for v in column if v is not None]
    if len(xs) < 2:
        raise ValueError("skewness needs at least 2 non-missing values")
    n = len(xs)
    mean = sum(xs) / n
    m2 = sum((x - mean) ** 2 for x in xs) / n
    if m2 == 0:
        return 0.0
    m3 = sum((x - mean) ** 3 for x in xs) / n
    return m3 / m2 ** 1.5


@dataclass(frozen=True)
class ImputationPolicy:
    skew_threshold: float = 1.0

    def __post_init__(self):
        if not self.skew_threshold > 0:
            raise ValueError("skew_threshold must be positive")


def _mode(values: list[int]) -> int:
    counts: dict[int, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def fill_values(instances: Sequence[Instance], schema: Schema,
                policy: ImputationPolicy = ImputationPolicy()) -> list:
    """Per-feature replacement value learned from the non-missing cells."""
    fills = []
    for j, a in enumerate(schema.features):
        present = [inst.values[j] for inst in instances if inst.values[j] is not None]
        if not present:
            raise AllMissingColumn(a.name)
        if a.kind == CATEGORICAL:
            fills.append(_mode(present))
        elif len(present) < 2 or abs(skewness(present)) <= policy.skew_threshold:
            fills.append(sum(present) / len(present))
        else:
            fills.append(float(median(present)))
    return fills


def fill_instance(inst: Instance, fills: Sequence) -> Instance:
    if all(v is not None for v in inst.values):
        return inst
    return Instance(tuple(f if v is None else v for v, f in zip(inst.values, fills)), inst.label)


def impute_missing(dataset: Sequence[Instance], schema: Schema,
                   policy: ImputationPolicy = ImputationPolicy()) -> list[Instance]:
    """Fill missing feature cells: mean for near-symmetric numeric columns,
    median when |skewness| exceeds the policy threshold, mode for categorical.

    Labels are never imputed.
    """
    fills = fill_values(dataset, schema, policy)
    return [fill_instance(inst, fills) for inst in dataset]


# -- normalization -----------------------------------------------------------

def normalize_column(column: Sequence[float], method: str) -> list[float]:
    xs = [float(v) for v in column]
    if not xs:
        raise DegenerateColumn("cannot normalize an empty column")
    if method == "minmax":
        lo, hi = min(xs), max(xs)
        if not hi > lo:
            raise DegenerateColumn("minmax needs max > min")
        return [(x - lo) / (hi - lo) for x in xs]
    if method == "zscore":
        mean = sum(xs) / len(xs)
        std = math.sqrt(sum((x - mean) ** 2 for x in xs) / len(xs))
        if std == 0:
            raise DegenerateColumn("zscore needs non-zero standard deviation")
        return [(x - mean) / std for x in xs]
    if method == "decimal":
        top = max(abs(x) for x in xs)
        j = 0
        while top / 10 ** j >= 1:
            j += 1
        return [x / 10 ** j for x in xs]
    raise ValueError(f"unknown normalization method {method!r}")


def normalize_dataset(data: Dataset, method: str) -> Dataset:
    """Normalize every numeric feature column; missing cells stay missing."""
    cols = []
    for j, a in enumerate(data.schema.features):
        col = data.column(j)
        if a.kind == NUMERIC:
            idx = [i for i, v in enumerate(col) if v is not None]
            scaled = normalize_column([col[i] for i in idx], method)
            col = list(col)
            for i, v in zip(idx, scaled):
                col[i] = v
        cols.append(col)
    instances = [Instance(tuple(c[i] for c in cols), inst.label)
                 for i, inst in enumerate(data.instances)]
    return Dataset(data.schema, instances, data.categories)
