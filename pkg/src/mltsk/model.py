"""End-to-end multi-label TSK fuzzy system: train, predict, persist."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .antecedent import AntecedentParams, estimate_antecedents, fcm_cluster
from .correlation import build_R
from .dataset import Dataset, Standardizer, fit_standardizer
from .errors import ParseError, UnsupportedVersionError, ValidationError
from .fuzzify import firing_matrix, fuzzy_map
from .solver import Problem, TrainConfig, fit

MODEL_FORMAT = "mltsk-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class MlTskModel:
    """A trained model; immutable and safe to share between threads."""

    antecedents: AntecedentParams
    consequents: np.ndarray
    standardizer: Standardizer
    tau: float
    label_names: list
    feature_names: list
    config: TrainConfig
    training_report: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.consequents, dtype=np.float64)
        K, D = self.antecedents.centers.shape
        if P.ndim != 2 or P.shape[0] != K * (D + 1):
            raise ValidationError(f"consequent matrix {P.shape} does not fit K={K}, D={D}")
        if P.shape[1] != len(self.label_names):
            raise ValidationError("consequent columns must match the label names")
        if self.standardizer.mean.shape[0] != D:
            raise ValidationError("standardizer dimension does not match antecedents")
        if not np.all(np.isfinite(P)):
            raise ValidationError("consequent matrix has non-finite entries")
        P.setflags(write=False)
        object.__setattr__(self, "consequents", P)

    @property
    def n_rules(self) -> int:
        return self.antecedents.n_rules

    @property
    def n_features(self) -> int:
        return self.antecedents.n_features

    @property
    def n_labels(self) -> int:
        return self.consequents.shape[1]


def _fcm_seed(seed):
    # child stream, independent of the power-iteration seeds used by the solver
    return int(np.random.SeedSequence(seed).spawn(1)[0].generate_state(1)[0])


@dataclass
class RuleStage:
    """Everything fitted before the consequent solve for one (K, h) setting."""

    standardizer: Standardizer
    antecedents: AntecedentParams
    problem: Problem


def fit_rules(data: Dataset, config: TrainConfig) -> RuleStage:
    """Standardize, cluster, build the antecedents, map to ``G`` and build ``R``.

    Depends only on ``K``, ``h``, the FCM settings and ``seed``, so one stage
    can serve every ``(alpha, beta, gamma)`` combination.
    """
    if data.n_instances < max(2, config.K):
        raise ValidationError(
            f"need at least max(2, K={config.K}) instances, got {data.n_instances}"
        )
    std = fit_standardizer(data)
    Xs = std.transform(data.features)
    fcm = fcm_cluster(Xs, config.K, config.fuzzifier, config.fcm_tol,
                      config.fcm_max_iter, _fcm_seed(config.seed), config.fcm_restarts)
    ante = estimate_antecedents(Xs, fcm.memberships, config.h)
    G = fuzzy_map(Xs, ante)
    corr = build_R(data.labels)
    return RuleStage(std, ante, Problem.build(G, data.labels, corr.R))


def train(data: Dataset, config: TrainConfig, stage: RuleStage | None = None) -> MlTskModel:
    """Fit a model on ``data``.

    ``stage`` may carry a precomputed :func:`fit_rules` result for the same
    data and ``(K, h, seed)``; the outcome is bit-identical either way.
    """
    t0 = time.perf_counter()
    if stage is None:
        stage = fit_rules(data, config)
    t1 = time.perf_counter()
    P, state = fit(None, None, None, config, problem=stage.problem)
    t2 = time.perf_counter()
    report = {
        "objective_trace": list(state.objective_trace),
        "df_trace": list(state.df_trace),
        "b_trace": list(state.b_trace),
        "initial_objective": state.initial_objective,
        "iterations": state.iterations,
        "best_iteration": state.best_iteration,
        "converged": state.converged,
        "lipschitz": state.L_f,
        "lipschitz_converged": state.lipschitz_converged,
        "min_curvature": state.min_curvature,
        "convex": bool(state.min_curvature >= 0),
        "timings": {"rules_s": t1 - t0, "solver_s": t2 - t1},
    }
    return MlTskModel(stage.antecedents, P, stage.standardizer, config.tau,
                      list(data.label_names), list(data.feature_names), config, report)


def _as_features(model: MlTskModel, X):
    if isinstance(X, Dataset):
        X = X.features
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} features per instance, got shape {X.shape}"
        )
    return model.standardizer.transform(X)


def predict_scores(model: MlTskModel, X) -> np.ndarray:
    """Real-valued label scores, L x N', as ``P^T x_g`` per instance."""
    G = fuzzy_map(_as_features(model, X), model.antecedents)
    return model.consequents.T @ G


def predict_scores_rulewise(model: MlTskModel, X) -> np.ndarray:
    """Same scores as :func:`predict_scores`, summed rule by rule.

    Evaluates each rule's affine consequent ``p0 + sum_i p_i x_i`` per label
    and weights it by the rule's normalized firing strength.
    """
    Xs = _as_features(model, X)
    mu = firing_matrix(Xs, model.antecedents)
    K, D = model.n_rules, model.n_features
    P = model.consequents
    out = np.zeros((model.n_labels, Xs.shape[1]))
    for k in range(K):
        block = P[k * (D + 1):(k + 1) * (D + 1)]
        rule_out = block[0][:, None] + block[1:].T @ Xs
        out += mu[k] * rule_out
    return out


def predict_labels(scores, tau: float = 0.5) -> np.ndarray:
    """Binary predictions: 1 where the score strictly exceeds ``tau``."""
    if not 0 < tau < 1:
        raise ValidationError(f"tau must lie in (0, 1), got {tau}")
    return (np.asarray(scores) > tau).astype(np.int64)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _matrix(a):
    return [[float(v) for v in row] for row in np.asarray(a)]


def model_to_dict(model: MlTskModel) -> dict:
    """JSON-ready document for :func:`save_model`.

    Schema, version 1 (all numbers are JSON floats written with Python's
    shortest round-trip repr, which reproduces every float64 exactly)::

        format          "mltsk-model"
        version         1
        n_rules, n_features, n_labels
        feature_names   [str] * D
        label_names     [str] * L
        tau             float
        standardizer    {"mean": [D], "std": [D]}
        antecedents     {"h": float, "centers": [[D]] * K, "widths": [[D]] * K}
        consequents     [[L]] * K(D+1)   rule-major rows, bias row first per rule
        config          TrainConfig fields
        training        objective_trace, df_trace, iterations, converged, lipschitz,
                        min_curvature
    """
    rep = model.training_report
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_rules": model.n_rules,
        "n_features": model.n_features,
        "n_labels": model.n_labels,
        "feature_names": list(model.feature_names),
        "label_names": list(model.label_names),
        "tau": float(model.tau),
        "standardizer": {
            "mean": [float(v) for v in model.standardizer.mean],
            "std": [float(v) for v in model.standardizer.std],
        },
        "antecedents": {
            "h": model.antecedents.h,
            "centers": _matrix(model.antecedents.centers),
            "widths": _matrix(model.antecedents.widths),
        },
        "consequents": _matrix(model.consequents),
        "config": model.config.to_dict(),
        "training": {
            "objective_trace": [float(v) for v in rep.get("objective_trace", [])],
            "df_trace": [float(v) for v in rep.get("df_trace", [])],
            "iterations": int(rep.get("iterations", 0)),
            "converged": bool(rep.get("converged", False)),
            "lipschitz": float(rep.get("lipschitz", math.nan)),
            "min_curvature": float(rep.get("min_curvature", math.nan)),
        },
    }


def model_from_dict(doc: dict) -> MlTskModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError("not an mltsk model document")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(
            f"model schema version {version!r} is not supported (expected {MODEL_VERSION})"
        )
    try:
        ante = doc["antecedents"]
        std = doc["standardizer"]
        K, D, L = doc["n_rules"], doc["n_features"], doc["n_labels"]
        centers = np.array(ante["centers"], dtype=np.float64).reshape(K, D)
        widths = np.array(ante["widths"], dtype=np.float64).reshape(K, D)
        P = np.array(doc["consequents"], dtype=np.float64).reshape(K * (D + 1), L)
        standardizer = Standardizer(np.array(std["mean"], dtype=np.float64).reshape(D),
                                    np.array(std["std"], dtype=np.float64).reshape(D))
        config = TrainConfig.from_dict(doc["config"])
        training = dict(doc.get("training", {}))
        return MlTskModel(AntecedentParams(centers, widths, ante["h"]), P, standardizer,
                          float(doc["tau"]), list(doc["label_names"]),
                          list(doc["feature_names"]), config, training)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise ParseError(f"inconsistent model document: {exc}") from None
        raise ParseError(f"malformed model document: {exc!r}") from None


def save_model(model: MlTskModel, path) -> None:
    text = json.dumps(model_to_dict(model), indent=1, allow_nan=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def load_model(path) -> MlTskModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return model_from_dict(doc)
