import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mltsk.correlation import build_R, correlation_table, pearson
from mltsk.errors import ValidationError


def test_pearson_examples():
    a = np.array([1.0, 0.0, 1.0, 0.0])
    assert pearson(a, a) == 1.0
    assert pearson(a, -a) == -1.0
    assert math.isclose(pearson(a, [1, 0, 0, 0]), 1 / math.sqrt(3), rel_tol=1e-14)


def test_pearson_zero_variance():
    assert pearson([1, 1, 1], [0, 1, 0]) == 0.0
    assert pearson([1, 1, 1], [1, 1, 1]) == 1.0


def test_pearson_errors():
    with pytest.raises(ValidationError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(ValidationError):
        pearson([1], [1])


def test_build_R_examples():
    same = build_R(np.array([[1, 0, 1, 1], [1, 0, 1, 1]]))
    assert same.R[0, 1] == 0.0
    comp = build_R(np.array([[1, 0, 1, 1], [0, 1, 0, 0]]))
    assert comp.R[0, 1] == 2.0
    hand = build_R(np.array([[1, 0, 1, 0], [1, 0, 0, 0]]))
    assert math.isclose(hand.R[0, 1], 1 - 1 / math.sqrt(3), rel_tol=1e-14)
    assert np.allclose(hand.R, 1.0 - hand.C)


def test_constant_labels_are_neutral():
    c = build_R(np.array([[1, 1, 1], [1, 1, 1], [0, 1, 0]]))
    assert c.R[0, 1] == 1.0 and c.R[0, 2] == 1.0
    assert np.all(np.diag(c.R) == 0.0)


def test_build_R_errors():
    with pytest.raises(ValidationError):
        build_R(np.ones((2, 1)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(2, 30))
def test_R_invariants(seed, L, N):
    rng = np.random.default_rng(seed)
    Y = rng.integers(0, 2, size=(L, N)).astype(float)
    c = build_R(Y)
    assert np.array_equal(c.R, c.R.T)
    assert np.all(np.diag(c.R) == 0.0)
    assert np.all((c.R >= 0) & (c.R <= 2))
    assert np.all((c.C >= -1) & (c.C <= 1))
    # permutation and duplication of instances leave R unchanged
    perm = rng.permutation(N)
    assert np.allclose(build_R(Y[:, perm]).R, c.R, atol=1e-12)
    assert np.allclose(build_R(np.hstack([Y, Y])).R, c.R, atol=1e-12)


def test_penalty_decreases_with_correlation():
    base = np.array([1, 1, 1, 0, 0, 0, 1, 0.0])
    Rs = []
    for flips in range(0, 5):
        other = base.copy()
        other[:flips] = 1 - other[:flips]
        Rs.append((pearson(base, other), build_R(np.vstack([base, other])).R[0, 1]))
    Rs.sort()
    assert all(r1 >= r2 for (_, r1), (_, r2) in zip(Rs, Rs[1:]))


def test_correlation_table_symmetric(rng):
    M = rng.standard_normal((4, 10))
    T = correlation_table(M)
    assert np.array_equal(T, T.T) and np.all(np.diag(T) == 1.0)
    assert np.allclose(T, np.corrcoef(M), atol=1e-12)
