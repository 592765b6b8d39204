"""Accelerated proximal gradient solver for the consequent matrix.

Minimizes ``0.5 * ||P^T G - Y||_F^2 + beta * ||P||_1 + alpha/2 * Tr(R P^T P)``
over ``P`` (K(D+1) x L), starting from the ridge solution and stepping with
``1 / L_f`` where ``L_f`` bounds the Lipschitz constant of the smooth part.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DivergenceError, NumericalError, ValidationError

logger = logging.getLogger(__name__)


class PowerIterationWarning(RuntimeWarning):
    """Power iteration hit its iteration cap before reaching tolerance."""


class NonConvexWarning(RuntimeWarning):
    """The smooth part has negative curvature, so the objective is unbounded below."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and numerical settings for one training run."""

    K: int = 3
    h: float = 1.0
    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 1.0
    tau: float = 0.5
    fuzzifier: float = 2.0
    fcm_tol: float = 1e-5
    fcm_max_iter: int = 100
    fcm_restarts: int = 1
    solver_tol: float = 1e-6
    solver_max_iter: int = 500
    power_tol: float = 1e-6
    power_max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValidationError(f"K must be a positive integer, got {self.K}")
        if not self.h > 0:
            raise ValidationError(f"h must be positive, got {self.h}")
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")
        if not 0 < self.tau < 1:
            raise ValidationError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.fuzzifier > 1:
            raise ValidationError(f"fuzzifier must exceed 1, got {self.fuzzifier}")
        for name in ("fcm_max_iter", "fcm_restarts", "solver_max_iter", "power_max_iter"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1")
        for name in ("fcm_tol", "solver_tol", "power_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        object.__setattr__(self, "K", int(self.K))

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SolverState:
    P_current: np.ndarray
    P_previous: np.ndarray
    b_current: float
    b_previous: float
    L_f: float
    objective_trace: list = field(default_factory=list)
    df_trace: list = field(default_factory=list)
    b_trace: list = field(default_factory=list)
    iterations: int = 0
    initial_objective: float = math.nan
    best_iteration: int = 0
    converged: bool = False
    lipschitz_converged: bool = True
    min_curvature: float = math.nan


@dataclass
class Problem:
    """Fixed data of one fit with the Gram products precomputed.

    Reusing a ``Problem`` across hyperparameter settings that share ``G``
    skips the ``O(K^2 D^2 N)`` products and caches the leading eigenvalues.
    """

    G: np.ndarray
    Y: np.ndarray
    R: np.ndarray
    A: np.ndarray
    B: np.ndarray
    _eig: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, G, Y, R) -> "Problem":
        G = np.asarray(G, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        R = np.asarray(R, dtype=np.float64)
        if G.ndim != 2 or Y.ndim != 2 or R.ndim != 2:
            raise ValidationError("G, Y and R must be matrices")
        if G.shape[1] != Y.shape[1]:
            raise ValidationError(f"G has {G.shape[1]} columns, Y has {Y.shape[1]}")
        if R.shape != (Y.shape[0], Y.shape[0]):
            raise ValidationError(f"R must be {Y.shape[0]} x {Y.shape[0]}, got {R.shape}")
        return cls(G, Y, R, G @ G.T, G @ Y.T)

    def leading_eigenvalue(self, which: str, tol: float, max_iter: int, seed: int):
        key = (which, tol, max_iter, seed)
        if key not in self._eig:
            if which == "A":
                self._eig[key] = power_iteration(self.A, tol, max_iter, seed)
            else:
                self._eig[key] = _largest_algebraic(self.R, tol, max_iter, seed)
        return self._eig[key]

    def smallest_eigenvalue(self, which: str) -> float:
        """Smallest eigenvalue of ``A`` or ``R`` from a dense symmetric solver."""
        key = ("min", which)
        if key not in self._eig:
            M = self.A if which == "A" else self.R
            self._eig[key] = float(scipy.linalg.eigh(M, eigvals_only=True,
                                                     subset_by_index=[0, 0],
                                                     check_finite=False)[0])
        return self._eig[key]

    def min_curvature(self, alpha: float) -> float:
        """``lambda_min(G G^T) + alpha * lambda_min(R)``, the Hessian's smallest eigenvalue.

        When it is negative the smooth part is non-convex and, since the L1
        term only grows linearly, the objective has no minimizer.
        """
        lam = self.smallest_eigenvalue("A")
        return lam + alpha * self.smallest_eigenvalue("R") if alpha else lam


def _check_shapes(P, G, Y, R=None):
    P = np.asarray(P, dtype=np.float64)
    if P.shape != (G.shape[0], Y.shape[0]):
        raise ValidationError(f"P must be {G.shape[0]} x {Y.shape[0]}, got {P.shape}")
    if G.shape[1] != Y.shape[1]:
        raise ValidationError(f"G has {G.shape[1]} columns, Y has {Y.shape[1]}")
    if R is not None and np.shape(R) != (Y.shape[0], Y.shape[0]):
        raise ValidationError(f"R must be {Y.shape[0]} x {Y.shape[0]}")
    return P


def _objective(P, G, Y, R, alpha, beta):
    resid = P.T @ G - Y
    val = 0.5 * float(np.sum(resid * resid))
    if beta != 0:
        val += beta * float(np.sum(np.abs(P)))
    if alpha != 0:
        val += 0.5 * alpha * float(np.sum(R * (P.T @ P)))
    return val


def objective(P, G, Y, R, alpha: float, beta: float) -> float:
    """Full objective including the L1 term."""
    G = np.asarray(G, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    P = _check_shapes(P, G, Y, R)
    return _objective(P, G, Y, np.asarray(R, dtype=np.float64), alpha, beta)


def _grad(P, A, B, R, alpha):
    g = A @ P - B
    if alpha != 0:
        g += alpha * (P @ R)
    return g


def grad_smooth(P, G, Y, R, alpha: float) -> np.ndarray:
    """Gradient of the smooth part: ``G G^T P - G Y^T + alpha P R``.

    ``R`` is assumed symmetric; the ``alpha/2`` factor of the trace term
    cancels the 2 from differentiating ``Tr(R P^T P)``.
    """
    G = np.asarray(G, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    P = _check_shapes(P, G, Y, R)
    return _grad(P, G @ G.T, G @ Y.T, np.asarray(R, dtype=np.float64), alpha)


def power_iteration(M, tol: float = 1e-6, max_iter: int = 1000, seed: int = 0):
    """Leading eigenvalue of a symmetric positive semidefinite matrix.

    Returns ``(eigenvalue, converged)``. Iteration stops when the Rayleigh
    quotient changes by at most ``tol`` relative to its current value.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = M @ x
        new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, True
        x = y / ny
        if abs(new - lam) <= tol * abs(new):
            return new, True
        lam = new
    return lam, False


def _largest_algebraic(S, tol, max_iter, seed):
    # Gershgorin shift makes S + sI positive semidefinite, so the dominant
    # eigenvalue of the shifted matrix is the largest algebraic one of S.
    s = float(np.max(np.sum(np.abs(S), axis=1)))
    if s == 0.0:
        return 0.0, True
    lam, ok = power_iteration(S + s * np.eye(S.shape[0]), tol, max_iter, seed)
    return lam - s, ok


def _power_seeds(seed):
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def _lipschitz(problem: Problem, alpha, tol, max_iter, seed):
    sa, sr = _power_seeds(seed)
    lam_a, ok_a = problem.leading_eigenvalue("A", tol, max_iter, sa)
    if alpha == 0:
        return lam_a, ok_a
    lam_r, ok_r = problem.leading_eigenvalue("R", tol, max_iter, sr)
    return lam_a + alpha * max(lam_r, 0.0), ok_a and ok_r


def lipschitz(G, R, alpha: float, tol: float = 1e-6, max_iter: int = 1000,
              seed: int = 0) -> float:
    """Lipschitz bound ``lambda_max(G G^T) + alpha * max(lambda_max(R), 0)``.

    Both eigenvalues come from power iteration. If either run fails to
    converge the last estimate is returned and a
    :class:`PowerIterationWarning` is issued.
    """
    G = np.asarray(G, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    prob = Problem(G, np.zeros((R.shape[0], G.shape[1])), R, G @ G.T, None)
    value, ok = _lipschitz(prob, alpha, tol, max_iter, seed)
    if not ok:
        warnings.warn("power iteration did not converge; Lipschitz bound is approximate",
                      PowerIterationWarning, stacklevel=2)
    return value


def soft_threshold(Z, theta: float) -> np.ndarray:
    """Elementwise shrinkage: ``z - theta`` above ``theta``, ``z + theta`` below
    ``-theta``, zero in between."""
    if theta < 0:
        raise ValidationError("theta must be non-negative")
    return kernels.soft_threshold(np.asarray(Z, dtype=np.float64), float(theta))


def _ridge(A, B, gamma):
    M = A + gamma * np.eye(A.shape[0]) if gamma else A
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(M, B, assume_a="pos", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            if gamma == 0:
                raise NumericalError(
                    f"G G^T is singular or ill-conditioned ({exc}); use gamma > 0"
                ) from None
    # gamma > 0 but badly scaled: accept the solution despite the warning
    return scipy.linalg.solve(M, B, assume_a="pos", check_finite=False)


def init_P(G, Y, gamma: float) -> np.ndarray:
    """Ridge start ``(G G^T + gamma I)^{-1} G Y^T`` via a positive-definite solve."""
    G = np.asarray(G, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if gamma < 0:
        raise ValidationError("gamma must be non-negative")
    if G.shape[1] != Y.shape[1]:
        raise ValidationError(f"G has {G.shape[1]} columns, Y has {Y.shape[1]}")
    return _ridge(G @ G.T, G @ Y.T, gamma)


def fit(G, Y, R, config: TrainConfig, P_init=None, problem: Problem | None = None):
    """Run the accelerated proximal iteration.

    Parameters
    ----------
    G, Y, R : ndarray
        Design matrix (K(D+1) x N), labels (L x N) and correlation penalty
        (L x L). Ignored when ``problem`` is given.
    config : TrainConfig
        Uses ``alpha``, ``beta``, ``gamma``, the solver and power-iteration
        settings, and ``seed``.
    P_init : ndarray, optional
        Starting point; defaults to the ridge solution.
    problem : Problem, optional
        Precomputed Gram products shared between fits.

    Returns
    -------
    P_star : ndarray
        Iterate with the lowest objective seen (the start included).
    state : SolverState
    """
    prob = problem if problem is not None else Problem.build(G, Y, R)
    alpha, beta = config.alpha, config.beta
    A, B, Rm = prob.A, prob.B, prob.R
    Gm, Ym = prob.G, prob.Y

    L_f, lip_ok = _lipschitz(prob, alpha, config.power_tol, config.power_max_iter, config.seed)
    if not lip_ok:
        logger.warning("power iteration did not converge; step size may be inexact")
    if not L_f > 0:
        raise NumericalError(f"non-positive Lipschitz constant {L_f}; is G all zero?")

    if P_init is None:
        P0 = _ridge(A, B, config.gamma)
    else:
        P0 = _check_shapes(P_init, Gm, Ym).copy()

    obj0 = _objective(P0, Gm, Ym, Rm, alpha, beta)
    if not math.isfinite(obj0):
        raise DivergenceError("initial objective is not finite", iteration=0)
    state = SolverState(P_current=P0, P_previous=P0, b_current=1.0, b_previous=1.0,
                        L_f=L_f, initial_objective=obj0, lipschitz_converged=lip_ok)
    state.b_trace.append(1.0)
    state.min_curvature = prob.min_curvature(alpha)
    if state.min_curvature < 0:
        warnings.warn(f"objective is non-convex (min curvature {state.min_curvature:.3g}); "
                      "reduce alpha or the rule count", NonConvexWarning, stacklevel=2)
    theta = beta / L_f
    best_P, best_obj = P0, obj0
    prev_obj = obj0
    P_cur = P_prev = P0
    b_cur = b_prev = 1.0

    for t in range(1, config.solver_max_iter + 1):
        mom = (b_prev - 1.0) / b_cur
        Pt = P_cur + mom * (P_cur - P_prev) if mom != 0.0 else P_cur
        Z = Pt - _grad(Pt, A, B, Rm, alpha) / L_f
        P_new = kernels.soft_threshold(Z, theta)
        b_new = (1.0 + math.sqrt(4.0 * b_cur * b_cur + 1.0)) / 2.0

        obj = _objective(P_new, Gm, Ym, Rm, alpha, beta)
        if not math.isfinite(obj):
            raise DivergenceError(f"objective became non-finite at iteration {t}", iteration=t)
        df = abs(obj - prev_obj)
        state.objective_trace.append(obj)
        state.df_trace.append(df)
        state.b_trace.append(b_new)
        state.iterations = t
        if obj < best_obj:
            best_P, best_obj = P_new, obj
            state.best_iteration = t

        P_prev, P_cur = P_cur, P_new
        b_prev, b_cur = b_cur, b_new
        if df / max(1.0, abs(prev_obj)) < config.solver_tol:
            state.converged = True
            break
        prev_obj = obj

    state.P_current, state.P_previous = P_cur, P_prev
    state.b_current, state.b_previous = b_cur, b_prev
    return best_P, state
