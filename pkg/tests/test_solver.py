import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mltsk.correlation import build_R
from mltsk.errors import NumericalError, ValidationError
from mltsk.solver import (NonConvexWarning, Problem, TrainConfig, fit, grad_smooth, init_P,
                          lipschitz, objective, power_iteration, soft_threshold)

from oracles import objective_loops, smooth_loops


def _instance(rng, K=2, D=3, L=4, N=20):
    G = rng.standard_normal((K * (D + 1), N))
    Y = rng.integers(0, 2, size=(L, N)).astype(float)
    R = build_R(Y).R
    return G, Y, R


# objective -------------------------------------------------------------------

def test_objective_zero_P(rng):
    G, Y, R = _instance(rng)
    P = np.zeros((G.shape[0], Y.shape[0]))
    assert objective(P, G, Y, R, 1.3, 0.7) == 0.5 * np.sum(Y * Y)


def test_objective_exact_fit(rng):
    G = rng.standard_normal((6, 6))
    P = rng.standard_normal((6, 2))
    Y = P.T @ G
    assert objective(P, G, Y, np.zeros((2, 2)), 0.0, 0.0) < 1e-20


def test_objective_matches_loops(rng):
    for _ in range(5):
        G, Y, R = _instance(rng)
        P = rng.standard_normal((G.shape[0], Y.shape[0]))
        a, b = rng.uniform(0, 5, size=2)
        ref = objective_loops(P, G, Y, R, a, b)
        assert math.isclose(objective(P, G, Y, R, a, b), ref, rel_tol=1e-10)


def test_objective_shape_errors(rng):
    G, Y, R = _instance(rng)
    with pytest.raises(ValidationError):
        objective(np.zeros((3, 4)), G, Y, R, 0, 0)
    with pytest.raises(ValidationError):
        grad_smooth(np.zeros((G.shape[0], 4)), G, Y, np.zeros((3, 3)), 1.0)


# gradient ---------------------------------------------------------------------

def test_gradient_zero_at_least_squares(rng):
    G, Y, R = _instance(rng, N=30)
    P = np.linalg.solve(G @ G.T, G @ Y.T)
    assert np.max(np.abs(grad_smooth(P, G, Y, R, 0.0))) < 1e-8


def test_gradient_at_zero(rng):
    G, Y, R = _instance(rng)
    P = np.zeros((G.shape[0], Y.shape[0]))
    assert np.array_equal(grad_smooth(P, G, Y, R, 2.0), -(G @ Y.T))


@pytest.mark.parametrize("alpha", [0.0, 0.5, 10.0])
def test_gradient_finite_differences(rng, alpha):
    for _ in range(10):
        K, D, L, N = rng.integers(1, 4), rng.integers(1, 5), rng.integers(1, 6), rng.integers(2, 31)
        G, Y, R = _instance(rng, K, D, L, N)
        P = rng.standard_normal((G.shape[0], L))
        g = grad_smooth(P, G, Y, R, alpha)
        fd = np.empty_like(P)
        h = 1e-6
        for idx in np.ndindex(P.shape):
            E = np.zeros_like(P)
            E[idx] = h
            fd[idx] = (objective(P + E, G, Y, R, alpha, 0) - objective(P - E, G, Y, R, alpha, 0)) / (2 * h)
        assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))) < 1e-5


def test_smooth_part_matches_loops(rng):
    G, Y, R = _instance(rng, 1, 2, 2, 5)
    P = rng.standard_normal((G.shape[0], 2))
    assert math.isclose(objective(P, G, Y, R, 0.4, 0.0), smooth_loops(P, G, Y, R, 0.4), rel_tol=1e-12)


# Lipschitz --------------------------------------------------------------------

def test_lipschitz_identity_and_diagonal():
    assert abs(lipschitz(np.eye(4), np.zeros((2, 2)), 0.0) - 1.0) < 1e-6
    assert abs(lipschitz(np.diag([3.0, 1.0]), np.zeros((2, 2)), 0.0) - 9.0) < 9e-6


def test_lipschitz_matches_dense_eigensolver(rng):
    G = rng.standard_normal((8, 12))
    S = rng.standard_normal((5, 5))
    R = S + S.T
    ref = np.linalg.eigvalsh(G @ G.T)[-1] + 0.5 * max(np.linalg.eigvalsh(R)[-1], 0.0)
    val = lipschitz(G, R, 0.5, tol=1e-12, max_iter=100000)
    assert abs(val - ref) / ref < 1e-6


def test_lipschitz_floors_negative_R():
    R = -np.eye(3)
    assert abs(lipschitz(np.eye(2), R, 5.0) - 1.0) < 1e-6


def test_lipschitz_bounds_gradient_map(rng):
    G, Y, R = _instance(rng)
    Lf = lipschitz(G, R, 3.0, tol=1e-10, max_iter=10000)
    for _ in range(20):
        P1, P2 = rng.standard_normal((2, G.shape[0], Y.shape[0]))
        num = np.linalg.norm(grad_smooth(P1, G, Y, R, 3.0) - grad_smooth(P2, G, Y, R, 3.0))
        assert num <= Lf * np.linalg.norm(P1 - P2) * (1 + 1e-6)


def test_power_iteration_warns_on_cap(rng):
    from mltsk.solver import PowerIterationWarning
    G = rng.standard_normal((6, 6))
    with pytest.warns(PowerIterationWarning):
        lipschitz(G, np.zeros((2, 2)), 0.0, tol=1e-15, max_iter=2)
    lam, ok = power_iteration(np.diag([2.0, 1.0]), 1e-12, 10000, 0)
    assert ok and abs(lam - 2.0) < 1e-9


# soft threshold ----------------------------------------------------------------

def test_soft_threshold_examples():
    assert math.isclose(soft_threshold(np.array([0.5]), 0.2)[0], 0.3)
    z = np.linspace(-0.2, 0.2, 41)
    assert np.all(soft_threshold(z, 0.2) == 0.0)
    z = np.random.default_rng(0).standard_normal(50)
    assert np.array_equal(soft_threshold(z, 0.0), z)
    with pytest.raises(ValidationError):
        soft_threshold(z, -1.0)


# ridge start --------------------------------------------------------------------

def test_init_P_examples():
    Y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    assert np.allclose(init_P(np.eye(3), Y, 0.0), Y.T)
    assert np.allclose(init_P(np.eye(3), Y, 1.0), Y.T / 2)


def test_init_P_residual(rng):
    G, Y, _ = _instance(rng, N=40)
    P = init_P(G, Y, 0.3)
    A = G @ G.T + 0.3 * np.eye(G.shape[0])
    assert np.linalg.norm(A @ P - G @ Y.T) / np.linalg.norm(G @ Y.T) < 1e-10


def test_init_P_singular_without_gamma():
    G = np.zeros((3, 4))
    G[0] = 1.0
    with pytest.raises(NumericalError, match="gamma"):
        init_P(G, np.ones((1, 4)), 0.0)


# fit ------------------------------------------------------------------------------

def _cfg(**kw):
    base = dict(alpha=0.0, beta=0.0, gamma=0.1, solver_tol=1e-6, solver_max_iter=500)
    base.update(kw)
    return TrainConfig(**base)


def test_fit_matches_closed_form(rng):
    # P error scales like the square root of the objective tolerance
    G, Y, R = _instance(rng, N=30)
    P, _ = fit(G, Y, R, _cfg(solver_tol=1e-12))
    ref = np.linalg.solve(G @ G.T, G @ Y.T)
    assert np.linalg.norm(P - ref) / np.linalg.norm(ref) < 1e-4


def test_fit_zero_target(rng):
    G, _, _ = _instance(rng)
    Y = np.zeros((3, G.shape[1]))
    P, state = fit(G, Y, np.ones((3, 3)) - np.eye(3), _cfg(alpha=1.0, beta=0.1, gamma=1.0))
    assert np.all(P == 0.0)
    assert state.converged


def test_fit_large_beta_from_zero(rng):
    G, Y, R = _instance(rng)
    beta = 2.0 * np.max(np.abs(G @ Y.T))
    P, state = fit(G, Y, R, _cfg(beta=beta), P_init=np.zeros((G.shape[0], Y.shape[0])))
    assert np.all(P == 0.0)
    assert state.iterations == 1 and state.converged


def test_fit_state_invariants(rng):
    G, Y, R = _instance(rng, N=30)
    P, s = fit(G, Y, R, _cfg(alpha=0.05, beta=0.1))
    assert s.L_f > 0
    assert len(s.objective_trace) == s.iterations == len(s.df_trace)
    assert len(s.b_trace) == s.iterations + 1 and s.b_trace[0] == 1.0
    b = np.array(s.b_trace)
    assert np.all(np.diff(b) > 0)
    assert np.allclose(b[1:] ** 2 - b[1:], b[:-1] ** 2, rtol=1e-9, atol=1e-9)
    assert min(s.objective_trace) <= s.initial_objective
    assert objective(P, G, Y, R, 0.05, 0.1) == min([s.initial_objective] + s.objective_trace)
    assert s.converged and s.df_trace[-1] / max(1.0, abs(s.objective_trace[-2])) < 1e-6


def test_fit_deterministic(rng):
    G, Y, R = _instance(rng)
    a, _ = fit(G, Y, R, _cfg(alpha=0.2, beta=0.3))
    b, _ = fit(G, Y, R, _cfg(alpha=0.2, beta=0.3))
    assert np.array_equal(a, b)


def test_sparsity_monotone_in_beta(rng):
    G, Y, R = _instance(rng, N=30)
    P0 = np.zeros((G.shape[0], Y.shape[0]))
    nnz = []
    for beta in (0.01, 0.1, 1.0, 10.0):
        P, _ = fit(G, Y, R, _cfg(beta=beta, solver_tol=1e-10, solver_max_iter=5000), P_init=P0)
        nnz.append(int(np.count_nonzero(P)))
    assert nnz == sorted(nnz, reverse=True)


def test_problem_reuse_is_bit_identical(rng):
    G, Y, R = _instance(rng)
    prob = Problem.build(G, Y, R)
    for a in (0.0, 0.3):
        cfg = _cfg(alpha=a, beta=0.2)
        p1, _ = fit(G, Y, R, cfg)
        p2, _ = fit(None, None, None, cfg, problem=prob)
        assert np.array_equal(p1, p2)


def test_nonconvex_warning():
    # negative curvature: rank-deficient G with an indefinite R
    G = np.zeros((2, 4))
    G[0] = 1.0
    Y = np.array([[1.0, 0, 1, 0], [0, 1.0, 0, 1]])
    R = build_R(Y).R
    with pytest.warns(NonConvexWarning):
        _, s = fit(G, Y, R, _cfg(alpha=1.0, gamma=1.0, solver_max_iter=5))
    assert s.min_curvature < 0


def test_convex_case_no_warning(rng):
    G, Y, R = _instance(rng, N=30)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonConvexWarning)
        _, s = fit(G, Y, R, _cfg(alpha=0.0))
    assert s.min_curvature > 0


def test_config_validation():
    for bad in (dict(alpha=-1), dict(tau=1.0), dict(K=0), dict(h=0), dict(fuzzifier=1.0)):
        with pytest.raises(ValidationError):
            TrainConfig(**bad)
    with pytest.raises(ValidationError):
        TrainConfig.from_dict({"bogus": 1})
    c = TrainConfig(K=4)
    assert TrainConfig.from_dict(c.to_dict()) == c


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
def test_descent_on_average(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    G, Y, R = _instance(rng, N=30)
    P, s = fit(G, Y, R, _cfg(alpha=alpha, beta=beta, gamma=1.0))
    assert objective(P, G, Y, R, alpha, beta) <= s.initial_objective
