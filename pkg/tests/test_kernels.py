import numpy as np
import pytest

from mltsk import kernels

MODS = kernels.available_backends()
PAIRS = [(a, b) for a in MODS for b in MODS if a < b]


def test_backend_selected():
    assert kernels.BACKEND in MODS
    assert "python" in MODS


@pytest.mark.skipif(not PAIRS, reason="only one backend built")
@pytest.mark.parametrize("a,b", PAIRS)
def test_backends_agree(a, b):
    rng = np.random.default_rng(0)
    A, B = MODS[a], MODS[b]
    X = rng.standard_normal((5, 200)) * 4
    C = rng.standard_normal((3, 5))
    W = rng.uniform(0.1, 2.0, (3, 5))
    assert np.allclose(A.firing_strengths(X, C, W), B.firing_strengths(X, C, W), rtol=1e-14, atol=1e-15)
    assert np.allclose(A.fuzzy_map(X, C, W), B.fuzzy_map(X, C, W), rtol=1e-14, atol=1e-15)
    Xt = np.ascontiguousarray(X.T)
    for m in (2.0, 2.5):
        ua, da = A.fcm_memberships(Xt, C, m)
        ub, db = B.fcm_memberships(Xt, C, m)
        assert np.allclose(ua, ub, rtol=1e-14, atol=1e-15)
        assert np.array_equal(da, db)
    Z = rng.standard_normal((7, 9))
    assert np.array_equal(A.soft_threshold(Z, 0.3), B.soft_threshold(Z, 0.3))
    S = rng.integers(0, 4, size=(6, 50)).astype(float)
    T = rng.integers(0, 2, size=(6, 50)).astype(float)
    assert np.array_equal(A.label_ranks(S), B.label_ranks(S))
    for u, v in zip(A.instance_metrics(S, T), B.instance_metrics(S, T)):
        assert np.array_equal(u, v, equal_nan=True)


def test_total_underflow_falls_back_to_uniform(backend):
    X = np.array([[1e200]])
    C = np.array([[0.0], [1.0]])
    W = np.array([[1e-6], [1e-6]])
    mu = kernels.firing_strengths(X, C, W)
    assert np.array_equal(mu[:, 0], [0.5, 0.5])
