"""Gaussian memberships, normalized firing strengths and the rule design matrix.

The design matrix ``G`` has ``K`` contiguous blocks of ``D + 1`` rows. Block
``k`` holds ``mu_k(x) * [1, x_1, ..., x_D]`` for each instance column, so
rows of the consequent matrix align block by block (bias first).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .antecedent import AntecedentParams
from .errors import ValidationError


def membership(x, c, delta):
    """Gaussian membership ``exp(-(x - c)**2 / (2 * delta**2))``; broadcasts."""
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta <= 0):
        raise ValidationError("delta must be positive")
    out = np.exp(-((np.asarray(x, dtype=np.float64) - c) ** 2) / (2.0 * delta ** 2))
    return float(out) if out.ndim == 0 else out


def _check(X, params: AntecedentParams):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be a D x N matrix")
    if X.shape[0] != params.n_features:
        raise ValidationError(
            f"X has {X.shape[0]} features, antecedents expect {params.n_features}"
        )
    return X


def firing_strengths(x, params: AntecedentParams) -> np.ndarray:
    """Normalized firing strengths of a single instance ``x`` (length D).

    Rule activations are summed in log space and normalized with a max shift,
    so high-dimensional inputs far from every center do not underflow. If
    every activation is ``-inf`` the uniform vector ``1/K`` is returned.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    return kernels.firing_strengths(_check(x, params), params.centers, params.widths)[:, 0]


def firing_matrix(X, params: AntecedentParams) -> np.ndarray:
    """Firing strengths for every column of ``X``; shape K x N."""
    return kernels.firing_strengths(_check(X, params), params.centers, params.widths)


def fuzzy_map(X, params: AntecedentParams) -> np.ndarray:
    """Map instances (columns of ``X``) to the K(D+1) x N design matrix."""
    return kernels.fuzzy_map(_check(X, params), params.centers, params.widths)


def design_column_reference(x, params: AntecedentParams) -> np.ndarray:
    """Column of ``G`` for one instance via direct products of memberships.

    Straightforward evaluation used as a cross-check; underflows for
    instances far from every center, unlike :func:`fuzzy_map`.
    """
    x = np.asarray(x, dtype=np.float64)
    act = np.array([math.prod(math.exp(-((xi - c) ** 2) / (2.0 * d * d))
                              for xi, c, d in zip(x, ck, dk))
                    for ck, dk in zip(params.centers, params.widths)])
    mu = act / act.sum()
    xe = np.concatenate(([1.0], x))
    return np.concatenate([m * xe for m in mu])
