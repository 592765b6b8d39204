import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mltsk.dataset import (Dataset, apply_standardizer, fit_standardizer, load_arff, load_csv,
                           load_dataset, make_folds, read_descriptor, read_mulan_labels,
                           write_csv, write_descriptor)
from mltsk.errors import ParseError, UnsupportedAttributeError, ValidationError

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# CSV ------------------------------------------------------------------------

def test_csv_shape(tmp_path):
    p = _write(tmp_path, "a.csv", "0.5,1.0,1\n2.0,-3e-2,0\n1,1,1\n")
    d = load_csv(p, 1)
    assert (d.n_features, d.n_labels, d.n_instances) == (2, 1, 3)
    assert d.features[1, 1] == -0.03


def test_csv_header_detected(tmp_path):
    p = _write(tmp_path, "a.csv", "x,y,lab\n0.5,1.0,1\n2.0,3,0\n")
    d = load_csv(p, 1)
    assert d.feature_names == ["x", "y"] and d.label_names == ["lab"]
    assert d.n_instances == 2


def test_csv_bad_label_names_row_and_column(tmp_path):
    p = _write(tmp_path, "a.csv", "0.5,1.0,1\n2.0,3,2\n")
    with pytest.raises(ValidationError) as err:
        load_csv(p, 1)
    msg = str(err.value)
    assert "row 2" in msg and "column 3" in msg


def test_csv_column_mismatch_reports_line(tmp_path):
    p = _write(tmp_path, "a.csv", "0.5,1.0,1\n2.0,1\n")
    with pytest.raises(ParseError) as err:
        load_csv(p, 1)
    assert err.value.line == 2


def test_csv_empty_file(tmp_path):
    with pytest.raises(ValidationError):
        load_csv(_write(tmp_path, "e.csv", ""), 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_csv_round_trip_bit_exact(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    D, L, N = rng.integers(1, 5), rng.integers(1, 4), rng.integers(1, 8)
    X = rng.standard_normal((D, N)) * 10.0 ** rng.integers(-12, 12, size=(D, N))
    Y = rng.integers(0, 2, size=(L, N))
    d = Dataset(X, Y)
    path = str(tmp_path_factory.mktemp("rt") / "d.csv")
    write_csv(d, path)
    back = load_csv(path, int(L))
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.labels, d.labels)
    # load -> write -> load is idempotent
    path2 = path + "2.csv"
    write_csv(back, path2)
    assert open(path).read() == open(path2).read()


def test_dataset_invariants():
    with pytest.raises(ValidationError):
        Dataset(np.ones((2, 3)), np.array([[0, 1, 2]]))
    with pytest.raises(ValidationError):
        Dataset(np.array([[np.nan, 1.0]]), np.array([[0, 1]]))
    with pytest.raises(ValidationError):
        Dataset(np.ones((2, 3)), np.ones((1, 2)))
    d = Dataset(np.ones((2, 3)), np.ones((1, 3)))
    with pytest.raises(ValueError):
        d.features[0, 0] = 5.0


# ARFF -----------------------------------------------------------------------

ARFF = """% comment
@relation 'toy: -C -2'
@attribute a numeric
@attribute 'b b' real
@attribute c integer
@attribute lab1 {0,1}
@attribute lab2 numeric
@data
1.0,2.0,3,1,0
4,5,6,0,1
{0 1.5,4 1}
"""


def test_arff_shape_and_sparse(tmp_path):
    p = _write(tmp_path, "t.arff", ARFF)
    d = load_arff(p, label_names=["lab1", "lab2"])
    assert (d.n_features, d.n_labels, d.n_instances) == (3, 2, 3)
    assert d.feature_names == ["a", "b b", "c"]
    assert list(d.features[:, 2]) == [1.5, 0.0, 0.0]
    assert list(d.labels[:, 2]) == [0.0, 1.0]


def test_arff_label_order_follows_names(tmp_path):
    p = _write(tmp_path, "t.arff", ARFF)
    d = load_arff(p, label_names=["lab2", "lab1"])
    assert list(d.labels[:, 0]) == [0.0, 1.0]


def test_arff_label_count_takes_last(tmp_path):
    d = load_arff(_write(tmp_path, "t.arff", ARFF), label_count=2)
    assert d.label_names == ["lab1", "lab2"]


def test_arff_unknown_label(tmp_path):
    with pytest.raises(ValidationError):
        load_arff(_write(tmp_path, "t.arff", ARFF), label_names=["nope"])


def test_arff_string_feature_rejected(tmp_path):
    text = ARFF.replace("@attribute c integer", "@attribute c string")
    with pytest.raises(UnsupportedAttributeError):
        load_arff(_write(tmp_path, "t.arff", text), label_names=["lab1", "lab2"])


def test_arff_missing_value_rejected(tmp_path):
    text = ARFF.replace("4,5,6,0,1", "4,?,6,0,1")
    with pytest.raises(ValidationError):
        load_arff(_write(tmp_path, "t.arff", text), label_names=["lab1", "lab2"])


def test_mulan_xml_and_descriptor(tmp_path):
    arff = _write(tmp_path, "t.arff", ARFF)
    xml = _write(tmp_path, "t.xml", '<?xml version="1.0"?>\n'
                 '<labels xmlns="http://mulan.sourceforge.net/labels">'
                 '<label name="lab1"></label><label name="lab2"></label></labels>')
    assert read_mulan_labels(xml) == ["lab1", "lab2"]
    desc = str(tmp_path / "t.json")
    write_descriptor(desc, "t.arff", "arff", label_names=["lab1", "lab2"])
    assert read_descriptor(desc)["path"] == arff
    d = load_dataset(desc)
    assert d.n_labels == 2 and d.n_features == 3


EMOTIONS = os.path.join(DATA_DIR, "emotions.arff")


@pytest.mark.skipif(not os.path.exists(EMOTIONS), reason="Emotions ARFF not available offline")
def test_emotions_shape():
    d = load_arff(EMOTIONS, label_count=6)
    assert (d.n_features, d.n_labels, d.n_instances) == (72, 6, 593)


# standardization -------------------------------------------------------------

def test_standardizer_constant_and_unit():
    X = np.array([[3.0, 3.0, 3.0, 3.0], [-1.0, 1.0, -1.0, 1.0]])
    d = Dataset(X, np.zeros((1, 4)))
    out = apply_standardizer(fit_standardizer(d), d)
    assert np.all(out.features[0] == 0.0)
    assert list(out.features[1]) == [-1.0, 1.0, -1.0, 1.0]
    assert np.array_equal(out.labels, d.labels)


def test_standardizer_moments_and_inverse(rng):
    X = rng.normal(5.0, 3.0, size=(5, 20))
    std = fit_standardizer(X)
    Z = std.transform(X)
    assert np.allclose(Z.mean(axis=1), 0.0, atol=1e-9)
    assert np.allclose(Z.std(axis=1), 1.0, atol=1e-9)
    assert np.allclose(std.inverse(Z), X, rtol=1e-9, atol=0)


# folds ----------------------------------------------------------------------

def test_folds_examples():
    p = make_folds(10, 5, 0)
    assert sorted(np.bincount(p.assignments)) == [2] * 5
    p = make_folds(11, 5, 0)
    assert sorted(np.bincount(p.assignments).tolist()) == [2, 2, 2, 2, 3]
    assert np.array_equal(make_folds(11, 5, 3).assignments, make_folds(11, 5, 3).assignments)


def test_folds_errors():
    with pytest.raises(ValidationError):
        make_folds(3, 4, 0)
    with pytest.raises(ValidationError):
        make_folds(3, 1, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 1000))
def test_folds_partition(n, k, seed):
    if k > n:
        return
    p = make_folds(n, k, seed)
    tests = [set(p.test_index(f).tolist()) for f in range(k)]
    assert set().union(*tests) == set(range(n))
    assert sum(len(t) for t in tests) == n
    sizes = [len(t) for t in tests]
    assert max(sizes) - min(sizes) <= 1
    for f in range(k):
        assert set(p.train_index(f).tolist()) == set(range(n)) - tests[f]
