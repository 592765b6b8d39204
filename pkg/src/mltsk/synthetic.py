"""Seeded synthetic multi-label datasets for tests, benchmarks and offline runs."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset


def two_blobs(n_per_blob: int = 40, n_features: int = 2, separation: float = 6.0,
              seed: int = 0) -> Dataset:
    """Two Gaussian blobs; label ``i`` indicates membership of blob ``i``.

    The two labels are complementary (Pearson -1) and linearly separable.
    """
    rng = np.random.default_rng(seed)
    shift = np.zeros(n_features)
    shift[0] = separation / 2.0
    a = rng.standard_normal((n_per_blob, n_features)) - shift
    b = rng.standard_normal((n_per_blob, n_features)) + shift
    X = np.vstack([a, b]).T
    blob = np.repeat([0, 1], n_per_blob)
    Y = np.vstack([blob == 0, blob == 1]).astype(np.float64)
    return Dataset(X, Y)


def correlated_blobs(n_per_blob: int = 40, n_features: int = 2, n_labels: int = 4,
                     separation: float = 3.0, flip: float = 0.15, seed: int = 0) -> Dataset:
    """Two blobs with ``n_labels`` noisy copies of the blob indicator.

    Every label equals the indicator with probability ``1 - flip``, so the
    labels are strongly and positively correlated with one another.
    """
    rng = np.random.default_rng(seed)
    shift = np.zeros(n_features)
    shift[0] = separation / 2.0
    a = rng.standard_normal((n_per_blob, n_features)) - shift
    b = rng.standard_normal((n_per_blob, n_features)) + shift
    X = np.vstack([a, b]).T
    blob = np.repeat([0.0, 1.0], n_per_blob)
    flips = rng.random((n_labels, blob.size)) < flip
    Y = np.where(flips, 1.0 - blob, blob)
    return Dataset(X, Y)


def emotions_surrogate(seed: int = 0, n_instances: int = 593, n_features: int = 72,
                       n_labels: int = 6, n_components: int = 6,
                       noise: float = 1.0) -> Dataset:
    """Offline stand-in with the Emotions shape (72 features, 593 instances, 6 labels).

    Instances come from a Gaussian mixture; each component carries a label
    profile and labels are drawn from it, giving about two labels per
    instance with correlated pairs. Features are the component mean plus
    independent unit noise.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, 1.5, size=(n_components, n_features))
    comp = rng.integers(0, n_components, size=n_instances)
    X = means[comp] + noise * rng.standard_normal((n_instances, n_features))
    # each component favours two labels
    profile = np.full((n_components, n_labels), 0.1)
    for c in range(n_components):
        profile[c, c % n_labels] = 0.85
        profile[c, (c + 1) % n_labels] = 0.7
    Y = (rng.random((n_instances, n_labels)) < profile[comp]).astype(np.float64)
    return Dataset(X.T, Y.T)
