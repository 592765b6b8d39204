"""Multi-label ranking metrics and Friedman / Bonferroni-Dunn statistics.

Score and truth matrices are ``L x N`` (one column per instance). Ranks put
the highest score first and break ties toward the lower label index.
Instances whose true label set is empty are skipped by AP, OE, RL and CV
(RL also skips instances where every label is relevant); the skip counts are
reported. Averages are accumulated sequentially in instance order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import kernels
from .errors import ValidationError

METRICS = ("ap", "hl", "oe", "rl", "cv")
HIGHER_IS_BETTER = {"ap": True, "hl": False, "oe": False, "rl": False, "cv": False}


@dataclass(frozen=True)
class MetricsReport:
    ap: float
    hl: float
    oe: float
    rl: float
    cv: float
    skipped_instances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}


def _pair(scores, truth):
    S = np.ascontiguousarray(scores, dtype=np.float64)
    T = np.ascontiguousarray(truth, dtype=np.float64)
    if S.ndim == 1:
        S = S[:, None]
    if T.ndim == 1:
        T = T[:, None]
    if S.shape != T.shape:
        raise ValidationError(f"scores {S.shape} and truth {T.shape} differ in shape")
    if not np.all(np.isfinite(S)):
        raise ValidationError("scores must be finite")
    if not np.all((T == 0) | (T == 1)):
        raise ValidationError("truth must be binary")
    return S, T


def _mean(values):
    kept = values[~np.isnan(values)]
    if kept.size == 0:
        return math.nan, int(values.size)
    return float(np.cumsum(kept)[-1]) / kept.size, int(values.size - kept.size)


def rank_labels(score_column) -> np.ndarray:
    """Ranks 1..L for one instance's scores; 1 is the highest score."""
    s = np.ascontiguousarray(np.asarray(score_column, dtype=np.float64).reshape(-1, 1))
    return kernels.label_ranks(s)[:, 0]


def average_precision(scores, truth) -> float:
    S, T = _pair(scores, truth)
    return _mean(kernels.instance_metrics(S, T)[0])[0]


def one_error(scores, truth) -> float:
    S, T = _pair(scores, truth)
    return _mean(kernels.instance_metrics(S, T)[1])[0]


def ranking_loss(scores, truth) -> float:
    S, T = _pair(scores, truth)
    return _mean(kernels.instance_metrics(S, T)[2])[0]


def coverage(scores, truth) -> float:
    """Coverage normalized by the label count, so it lies in [0, 1)."""
    S, T = _pair(scores, truth)
    return _mean(kernels.instance_metrics(S, T)[3])[0]


def hamming_loss(pred, truth) -> float:
    P = np.asarray(pred)
    T = np.asarray(truth)
    if P.ndim == 1:
        P = P[:, None]
    if T.ndim == 1:
        T = T[:, None]
    if P.shape != T.shape:
        raise ValidationError(f"pred {P.shape} and truth {T.shape} differ in shape")
    if not (np.all((P == 0) | (P == 1)) and np.all((T == 0) | (T == 1))):
        raise ValidationError("hamming_loss needs binary matrices")
    L = P.shape[0]
    per = np.sum(P != T, axis=0) / L
    return float(np.cumsum(per)[-1]) / per.size


def evaluate(scores, truth, tau: float = 0.5) -> MetricsReport:
    """All five metrics; HL thresholds ``scores`` strictly above ``tau``."""
    S, T = _pair(scores, truth)
    ap, oe, rl, cv = kernels.instance_metrics(S, T)
    vals, skipped = {}, {}
    for name, arr in (("ap", ap), ("oe", oe), ("rl", rl), ("cv", cv)):
        vals[name], skipped[name] = _mean(arr)
    vals["hl"] = hamming_loss((S > tau).astype(np.int64), T)
    skipped["hl"] = 0
    return MetricsReport(skipped_instances=skipped, **vals)


# ---------------------------------------------------------------------------
# Statistical comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankTable:
    """Per-dataset ranks of ``k`` methods over ``M`` datasets.

    ``scores`` is ``M x k``. Rank 1 is the best method on a dataset; tied
    methods share the average of the ranks they span.
    """

    scores: np.ndarray
    methods: list
    datasets: list
    higher_is_better: bool = True
    ranks: np.ndarray = field(init=False)
    average_ranks: np.ndarray = field(init=False)

    def __post_init__(self):
        S = np.asarray(self.scores, dtype=np.float64)
        if S.ndim != 2:
            raise ValidationError("scores must be a datasets x methods matrix")
        M, k = S.shape
        if len(self.methods) != k or len(self.datasets) != M:
            raise ValidationError("method/dataset names do not match the score matrix")
        if not np.all(np.isfinite(S)):
            raise ValidationError("rank table scores must be finite")
        keyed = -S if self.higher_is_better else S
        ranks = np.vstack([rankdata(row, method="average") for row in keyed]) if M else S
        object.__setattr__(self, "scores", S)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "average_ranks", ranks.mean(axis=0))

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    @property
    def M(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class FriedmanResult:
    chi2: float
    F: float
    degenerate: bool
    reason: str = ""


def friedman_statistic(table: RankTable) -> FriedmanResult:
    """Friedman chi-square and its F-distributed (Iman-Davenport) variant.

    ``F = (M - 1) chi2 / (M (k - 1) - chi2)``. If no method's rank varies
    from the mean (all tied everywhere) the result is ``F = 0`` flagged
    degenerate; if every dataset ranks the methods identically the
    denominator vanishes and ``F = inf``, also flagged.
    """
    k, M = table.k, table.M
    if k < 2 or M < 2:
        raise ValidationError(f"need k >= 2 and M >= 2, got k={k}, M={M}")
    R = table.average_ranks
    chi2 = 12.0 * M / (k * (k + 1)) * (float(np.sum(R * R)) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(chi2, 0.0)
    if np.all(table.ranks == (k + 1) / 2.0):
        return FriedmanResult(chi2, 0.0, True, "all methods tie on every dataset")
    denom = M * (k - 1) - chi2
    if denom <= 1e-12 * M * (k - 1):
        return FriedmanResult(chi2, math.inf, True, "identical ranking on every dataset")
    return FriedmanResult(chi2, (M - 1) * chi2 / denom, False)


def bonferroni_dunn_cd(k: int, M: int, q_alpha: float) -> float:
    """Critical difference ``q_alpha * sqrt(k (k + 1) / (6 M))``."""
    if k < 2 or M < 1 or not q_alpha > 0:
        raise ValidationError(f"invalid arguments k={k}, M={M}, q_alpha={q_alpha}")
    return q_alpha * math.sqrt(k * (k + 1) / (6.0 * M))
