import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from icft.dataprep import (AllMissingColumn, ClassMustBeCategorical, DegenerateColumn,
                           DuplicateAttribute, ImputationPolicy, Instance, MissingClassAttribute,
                           impute_missing, normalize_column, parse_schema, read_csv, skewness,
                           write_csv)


def schema_doc(attrs, cls="label"):
    return {"attributes": [{"name": n, "kind": k} for n, k in attrs], "class": cls}


@pytest.fixture
def mixed_schema():
    return parse_schema(schema_doc([("a", "numeric"), ("b", "categorical"),
                                    ("c", "numeric"), ("label", "categorical")]))


def test_parse_schema_keeps_document_order(mixed_schema):
    assert mixed_schema.feature_names == ["a", "b", "c"]
    assert mixed_schema.missing_token == "?"


def test_parse_schema_from_string():
    s = parse_schema(json.dumps(schema_doc([("x", "numeric"), ("y", "categorical")], "y")))
    assert s.feature_names == ["x"]


@pytest.mark.parametrize("doc, err", [
    (schema_doc([("x", "numeric"), ("x", "numeric"), ("label", "categorical")]),
     DuplicateAttribute),
    (schema_doc([("x", "numeric"), ("label", "numeric")]), ClassMustBeCategorical),
    (schema_doc([("x", "numeric")], cls="nope"), MissingClassAttribute),
    ({"attributes": [{"name": "x", "kind": "numeric"}]}, MissingClassAttribute),
])
def test_parse_schema_rejects(doc, err):
    with pytest.raises(err):
        parse_schema(doc)


@pytest.mark.parametrize("col, expected", [
    ([1, 2, 3], 0.0),
    ([5, 5, 5, 5], 0.0),
    ([1, 1, 1, 100], 1.1547005383792517),  # exact-fraction moment evaluation
])
def test_skewness(col, expected):
    assert skewness(col) == pytest.approx(expected, abs=1e-12)


def test_skewness_ignores_missing_and_needs_two():
    assert skewness([1, None, 2, 3]) == 0.0
    with pytest.raises(ValueError):
        skewness([1, None])


def _num_schema():
    return parse_schema(schema_doc([("x", "numeric"), ("label", "categorical")]))


def test_impute_mean_when_symmetric():
    data = [Instance((v,), 0) for v in (1.0, 2.0, None, 3.0)]
    out = impute_missing(data, _num_schema())
    assert out[2].values == (2.0,)


def test_impute_median_when_skewed():
    data = [Instance((v,), 0) for v in (1.0, 1.0, 1.0, 100.0, None)]
    out = impute_missing(data, _num_schema())
    assert out[4].values == (1.0,)


def test_impute_mode_for_categorical():
    s = parse_schema(schema_doc([("k", "categorical"), ("label", "categorical")]))
    data = [Instance((v,), 0) for v in (0, 0, 1, None)]
    assert impute_missing(data, s)[3].values == (0,)


def test_impute_mode_tie_goes_to_lowest_id():
    s = parse_schema(schema_doc([("k", "categorical"), ("label", "categorical")]))
    data = [Instance((v,), 0) for v in (2, 1, None)]
    assert impute_missing(data, s)[2].values == (1,)


def test_impute_all_missing_column_named():
    with pytest.raises(AllMissingColumn) as exc:
        impute_missing([Instance((None,), 0)] * 3, _num_schema())
    assert exc.value.attribute == "x"


def test_unlabeled_passes_through():
    data = [Instance((1.0,), None), Instance((None,), None), Instance((3.0,), 1)]
    out = impute_missing(data, _num_schema())
    assert [i.label for i in out] == [None, None, 1]
    assert out[1].values == (2.0,)


def test_skew_threshold_validated():
    with pytest.raises(ValueError):
        ImputationPolicy(0.0)


cells = st.one_of(st.none(), st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(st.lists(cells, min_size=2, max_size=30).filter(lambda c: any(v is not None for v in c)))
def test_impute_idempotent_and_preserves_present(col):
    s = _num_schema()
    data = [Instance((v,), 0) for v in col]
    once = impute_missing(data, s)
    assert impute_missing(once, s) == once
    for before, after in zip(data, once):
        assert after.values[0] is not None
        if before.values[0] is not None:
            assert after.values[0] == before.values[0]


def test_fill_statistics_match_scan_oracle():
    rng = random.Random(3)
    s = parse_schema(schema_doc([("x", "numeric"), ("k", "categorical"), ("label", "categorical")]))
    for _ in range(25):
        n = rng.randint(3, 40)
        xs = [rng.choice([None, rng.uniform(-5, 5)]) for _ in range(n)]
        ks = [rng.choice([None, rng.randint(0, 3)]) for _ in range(n)]
        if all(v is None for v in xs) or all(v is None for v in ks):
            continue
        out = impute_missing([Instance((a, b), 0) for a, b in zip(xs, ks)], s)
        present = [v for v in xs if v is not None]
        # brute-force scan oracle
        mean = sum(present) / len(present)
        srt = sorted(present)
        mid = len(srt) // 2
        med = srt[mid] if len(srt) % 2 else (srt[mid - 1] + srt[mid]) / 2
        skew_ok = len(present) < 2 or abs(skewness(present)) <= 1.0
        expect_x = mean if skew_ok else med
        kp = [v for v in ks if v is not None]
        expect_k = min(set(kp), key=lambda v: (-kp.count(v), v))
        for i in range(n):
            if xs[i] is None:
                assert out[i].values[0] == pytest.approx(expect_x)
            if ks[i] is None:
                assert out[i].values[1] == expect_k


@pytest.mark.parametrize("method, col, expected", [
    ("minmax", [0, 5, 10], [0, 0.5, 1]),
    ("zscore", [1, 2, 3], [-1.2247, 0, 1.2247]),
    ("decimal", [-991, 99], [-0.991, 0.099]),
    ("decimal", [0, 0], [0, 0]),
])
def test_normalize_examples(method, col, expected):
    assert normalize_column(col, method) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("method, col", [("minmax", [3, 3]), ("zscore", [2, 2, 2]),
                                         ("minmax", [])])
def test_normalize_degenerate(method, col):
    with pytest.raises(DegenerateColumn):
        normalize_column(col, method)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=2, max_size=40))
def test_normalize_properties(col):
    if max(col) > min(col):
        mm = normalize_column(col, "minmax")
        assert all(0 <= v <= 1 for v in mm)
        mean = sum(col) / len(col)
        if sum((v - mean) ** 2 for v in col) / len(col) > 1e-6:
            z = normalize_column(col, "zscore")
            zm = sum(z) / len(z)
            assert abs(zm) < 1e-9
            assert abs((sum((v - zm) ** 2 for v in z) / len(z)) ** 0.5 - 1) < 1e-9
    assert all(abs(v) < 1 for v in normalize_column(col, "decimal"))


def test_csv_round_trip(tmp_path, mixed_schema):
    src = tmp_path / "d.csv"
    src.write_text("a,b,c,label\n1.5,red,?,yes\n?,blue,2,no\n3,red,4,?\n")
    data = read_csv(src, mixed_schema)
    assert data.categories["b"] == ["blue", "red"]
    assert data.instances[0] == Instance((1.5, 1, None), 1)
    assert data.instances[2].label is None
    out = tmp_path / "o.csv"
    write_csv(out, data)
    again = read_csv(out, mixed_schema)
    assert again.instances == data.instances


def test_csv_header_mismatch(tmp_path, mixed_schema):
    src = tmp_path / "d.csv"
    src.write_text("a,b,label\n1,red,yes\n")
    with pytest.raises(ValueError):
        read_csv(src, mixed_schema)
