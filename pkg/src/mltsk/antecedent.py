"""Rule antecedents: Fuzzy C-Means partition and Gaussian center/width estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateClusterError, ValidationError

WIDTH_FLOOR = 1e-6


@dataclass(frozen=True)
class FcmResult:
    """Output of :func:`fcm_cluster`.

    Attributes
    ----------
    memberships : ndarray, shape (N, K)
        Fuzzy partition matrix; rows sum to one.
    centers : ndarray, shape (K, D)
        Cluster prototypes of the final iteration.
    objective_trace : list of float
        ``sum_jk u_jk**m * ||x_j - c_k||**2`` after each iteration.
    iterations : int
        Completed iterations of the winning restart.
    """

    memberships: np.ndarray
    centers: np.ndarray
    objective_trace: list
    iterations: int


@dataclass(frozen=True)
class AntecedentParams:
    centers: np.ndarray
    widths: np.ndarray
    h: float

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=np.float64)
        w = np.ascontiguousarray(self.widths, dtype=np.float64)
        if c.ndim != 2 or c.shape != w.shape:
            raise ValidationError(f"centers {c.shape} and widths {w.shape} must be equal K x D")
        if not np.all(w > 0):
            raise ValidationError("all widths must be strictly positive")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(w))):
            raise ValidationError("antecedent parameters must be finite")
        if not self.h > 0:
            raise ValidationError(f"h must be positive, got {self.h}")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]


def _fcm_objective(U, d2, m):
    return float(np.sum((U ** m) * d2))


def _fcm_run(Xt, K, m, tol, max_iter, rng):
    N = Xt.shape[0]
    U = rng.random((N, K))
    U /= U.sum(axis=1, keepdims=True)
    centers = np.zeros((K, Xt.shape[1]))
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        W = U ** m
        mass = W.sum(axis=0)
        live = mass > 0
        # a cluster that lost every point keeps its previous prototype
        centers[live] = (W.T @ Xt)[live] / mass[live, None]
        U, d2 = kernels.fcm_memberships(Xt, centers, m)
        trace.append(_fcm_objective(U, d2, m))
        if len(trace) > 1:
            prev = trace[-2]
            if abs(prev - trace[-1]) <= tol * max(prev, np.finfo(float).tiny):
                break
    return FcmResult(U, centers.copy(), trace, it)


def fcm_cluster(X, K: int, m: float = 2.0, tol: float = 1e-5, max_iter: int = 100,
                seed: int = 0, restarts: int = 1) -> FcmResult:
    """Fuzzy C-Means on the columns of ``X`` (D x N).

    Memberships are initialised uniformly at random and row-normalised. The
    loop alternates prototype and membership updates and stops once the
    relative objective change falls to ``tol`` or ``max_iter`` is reached.
    With ``restarts > 1`` the run with the lowest final objective wins.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be a D x N matrix")
    N = X.shape[1]
    if K < 1:
        raise ValidationError(f"K must be at least 1, got {K}")
    if N < K:
        raise ValidationError(f"need at least K={K} instances, got N={N}")
    if not m > 1:
        raise ValidationError(f"fuzzifier m must exceed 1, got {m}")
    if max_iter < 1 or restarts < 1:
        raise ValidationError("max_iter and restarts must be positive")
    Xt = np.ascontiguousarray(X.T)

    if K == 1:
        centers = Xt.mean(axis=0, keepdims=True)
        U = np.ones((N, 1))
        d2 = ((Xt - centers) ** 2).sum(axis=1, keepdims=True)
        return FcmResult(U, centers, [_fcm_objective(U, d2, m)], 1)

    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        res = _fcm_run(Xt, K, m, tol, max_iter, np.random.default_rng(child))
        if best is None or res.objective_trace[-1] < best.objective_trace[-1]:
            best = res
    return best


def estimate_antecedents(X, U, h: float) -> AntecedentParams:
    """Gaussian centers and widths from a fuzzy partition.

    ``c[k, i]`` is the membership-weighted mean of feature ``i`` and
    ``delta[k, i]`` is ``h`` times the membership-weighted variance, with raw
    (not exponentiated) memberships as weights. Widths are clamped below at
    ``WIDTH_FLOOR`` times the feature's range (1 for constant features).
    """
    X = np.asarray(X, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if not h > 0:
        raise ValidationError(f"h must be positive, got {h}")
    if U.ndim != 2 or U.shape[0] != X.shape[1]:
        raise ValidationError(f"U has shape {U.shape}, expected ({X.shape[1]}, K)")
    Xt = X.T
    mass = U.sum(axis=0)
    if np.any(mass <= 0):
        raise DegenerateClusterError(
            f"cluster(s) {np.flatnonzero(mass <= 0).tolist()} have zero total membership"
        )
    K = U.shape[1]
    centers = (U.T @ Xt) / mass[:, None]
    spread = np.empty_like(centers)
    for k in range(K):
        dev = Xt - centers[k]
        spread[k] = (U[:, k] @ (dev * dev)) / mass[k]
    widths = h * spread
    rng = X.max(axis=1) - X.min(axis=1)
    floor = WIDTH_FLOOR * np.where(rng > 0, rng, 1.0)
    widths = np.maximum(widths, floor[None, :])
    return AntecedentParams(centers, widths, h)
