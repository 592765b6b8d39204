"""Label-correlation penalty matrix built from Pearson coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson matrix ``C`` of the label rows and penalty ``R = 1 - C``.

    ``R[i, j]`` is small for strongly correlated labels and reaches 2 for
    complementary ones; its diagonal is zero.
    """

    R: np.ndarray
    C: np.ndarray


def _coefficient(a, b) -> float:
    da = a - a.mean()
    db = b - b.mean()
    saa = float(da @ da)
    sbb = float(db @ db)
    if saa == 0.0 or sbb == 0.0:
        return 0.0
    r = float(da @ db) / np.sqrt(saa * sbb)
    return float(min(1.0, max(-1.0, r)))


def pearson(a, b) -> float:
    """Pearson correlation of two equal-length vectors.

    A zero-variance argument gives 0, except that a vector is always fully
    correlated with itself (``pearson(a, a) == 1``).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValidationError("pearson needs at least two observations")
    if np.array_equal(a, b):
        return 1.0
    return _coefficient(a, b)


def build_R(Y) -> CorrelationMatrix:
    """Correlation matrices for the label rows of ``Y`` (L x N)."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValidationError("Y must be an L x N matrix")
    L, N = Y.shape
    if L < 1 or N < 2:
        raise ValidationError(f"need L >= 1 and N >= 2, got L={L}, N={N}")
    C = np.eye(L)
    for i in range(L):
        for j in range(i + 1, L):
            # constant labels carry no evidence: c = 0 even for equal rows
            if np.ptp(Y[i]) == 0 or np.ptp(Y[j]) == 0:
                continue
            C[i, j] = C[j, i] = 1.0 if np.array_equal(Y[i], Y[j]) else _coefficient(Y[i], Y[j])
    R = 1.0 - C
    C.setflags(write=False)
    R.setflags(write=False)
    return CorrelationMatrix(R, C)


def correlation_table(M) -> np.ndarray:
    """Pairwise Pearson coefficients between the rows of ``M``."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = pearson(M[i], M[j])
    return out
