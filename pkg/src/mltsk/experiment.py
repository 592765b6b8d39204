"""Cross-validation, grid search, ablation and report writers used by the CLI."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .correlation import correlation_table
from .dataset import Dataset, FoldPlan, make_folds
from .errors import NumericalError, ValidationError
from .evaluation import HIGHER_IS_BETTER, METRICS, MetricsReport, evaluate
from .model import MlTskModel, fit_rules, predict_scores, save_model, train
from .solver import TrainConfig

logger = logging.getLogger(__name__)

GRID_KEYS = ("K", "h", "alpha", "beta", "gamma")

# hyperparameter ranges searched by default
DEFAULT_GRID = {
    "K": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    "h": [0.1, 1.0, 10.0, 100.0],
    "alpha": [0.01, 0.1, 1.0, 10.0, 100.0],
    "beta": [0.01, 0.1, 1.0, 10.0, 100.0],
    "gamma": [0.1, 1.0, 10.0, 100.0],
}


def fmt4(value: float) -> str:
    return "nan" if value is None or math.isnan(value) else f"{value:.4f}"


def display(mean: float, sd: float | None = None) -> str:
    if sd is None:
        return fmt4(mean)
    return f"{fmt4(mean)} ({fmt4(sd)})"


def plan_digest(plan: FoldPlan) -> str:
    return hashlib.sha256(np.asarray(plan.assignments, dtype=np.int64).tobytes()).hexdigest()


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class CvResult:
    config: TrainConfig
    plan: FoldPlan
    folds: list
    mean: dict
    sd: dict
    models: list = field(default_factory=list)
    status: str = "ok"
    error: str = ""

    def aggregate_rows(self):
        return [(m, self.mean[m], self.sd[m]) for m in METRICS]


def aggregate(reports) -> tuple[dict, dict]:
    """Mean and sample standard deviation (ddof=1) of each metric over folds."""
    mean, sd = {}, {}
    for m in METRICS:
        vals = np.array([getattr(r, m) for r in reports], dtype=np.float64)
        mean[m] = float(np.sum(vals)) / vals.size
        sd[m] = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return mean, sd


def run_fold(data: Dataset, train_idx, test_idx, config: TrainConfig, stage=None):
    train_ds = data.subset(train_idx)
    model = train(train_ds, config, stage)
    test_ds = data.subset(test_idx)
    scores = predict_scores(model, test_ds.features)
    return model, evaluate(scores, test_ds.labels, config.tau)


def cross_validate(data: Dataset, config: TrainConfig, plan: FoldPlan,
                   keep_models: bool = False) -> CvResult:
    """Fit every fitted quantity on the training split only, score the held-out fold."""
    if plan.assignments.shape[0] != data.n_instances:
        raise ValidationError("fold plan does not match the dataset size")
    reports, models = [], []
    for train_idx, test_idx in plan.splits():
        model, rep = run_fold(data, train_idx, test_idx, config)
        reports.append(rep)
        if keep_models:
            models.append(model)
    mean, sd = aggregate(reports)
    return CvResult(config, plan, reports, mean, sd, models)


def write_metrics_csv(path, dataset_name: str, result: CvResult, extra=None) -> None:
    """Long-format metric rows: one per (fold, metric) plus one ``mean`` row per metric."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["dataset", "fold", "metric", "value", "sd", "display"]
        if extra:
            head = list(extra) + head
        w.writerow(head)
        pre = list(extra.values()) if extra else []
        for f, rep in enumerate(result.folds):
            for m in METRICS:
                v = getattr(rep, m)
                w.writerow(pre + [dataset_name, f, m, repr(v), "", display(v)])
        for m, mu, sd in result.aggregate_rows():
            w.writerow(pre + [dataset_name, "mean", m, repr(mu), repr(sd), display(mu, sd)])


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def grid_cells(grid: dict):
    """Cells in lexicographic order over (K, h, alpha, beta, gamma)."""
    for key in GRID_KEYS:
        if not grid.get(key):
            raise ValidationError(f"grid list for {key!r} is empty")
    for combo in itertools.product(*(grid[k] for k in GRID_KEYS)):
        yield dict(zip(GRID_KEYS, combo))


def cell_key(cell: dict) -> str:
    return "_".join(f"{k}{float(cell[k])!r}" for k in GRID_KEYS)


def _cell_config(base: TrainConfig, cell: dict) -> TrainConfig:
    return base.replace(K=int(cell["K"]), h=float(cell["h"]), alpha=float(cell["alpha"]),
                        beta=float(cell["beta"]), gamma=float(cell["gamma"]))


def _cell_doc(cell, cfg, reports, mean, sd, status, error, digest):
    return {
        "cell": {k: cell[k] for k in GRID_KEYS},
        "config": cfg.to_dict(),
        "plan_digest": digest,
        "status": status,
        "error": error,
        "folds": [r.as_dict() for r in reports],
        "mean": mean,
        "sd": sd,
    }


def _load_cell(path, cfg, digest):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None
    if doc.get("config") != cfg.to_dict() or doc.get("plan_digest") != digest:
        return None
    return doc


def _write_json_atomic(path, doc):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def _run_group(data: Dataset, plan: FoldPlan, base: TrainConfig, cells, cell_dir):
    """Evaluate all cells sharing one (K, h); rule stages are fitted once per fold."""
    digest = plan_digest(plan)
    todo = []
    docs = {}
    for cell in cells:
        cfg = _cell_config(base, cell)
        path = os.path.join(cell_dir, cell_key(cell) + ".json") if cell_dir else None
        doc = _load_cell(path, cfg, digest) if path and os.path.exists(path) else None
        if doc is not None:
            docs[cell_key(cell)] = doc
        else:
            todo.append((cell, cfg, path))
    if not todo:
        return docs

    reports = {cell_key(c): [] for c, _, _ in todo}
    failed = {}
    for train_idx, test_idx in plan.splits():
        train_ds = data.subset(train_idx)
        test_ds = data.subset(test_idx)
        stage = fit_rules(train_ds, todo[0][1])
        for cell, cfg, _ in todo:
            key = cell_key(cell)
            if key in failed:
                continue
            try:
                model = train(train_ds, cfg, stage)
            except NumericalError as exc:
                failed[key] = str(exc)
                continue
            scores = predict_scores(model, test_ds.features)
            reports[key].append(evaluate(scores, test_ds.labels, cfg.tau))

    for cell, cfg, path in todo:
        key = cell_key(cell)
        if key in failed:
            nan = {m: math.nan for m in METRICS}
            doc = _cell_doc(cell, cfg, [], nan, dict(nan), "failed", failed[key], digest)
        else:
            mean, sd = aggregate(reports[key])
            doc = _cell_doc(cell, cfg, reports[key], mean, sd, "ok", "", digest)
        if path:
            _write_json_atomic(path, doc)
        docs[key] = doc
    return docs


def _group_job(args):
    return _run_group(*args)


@dataclass
class GridResult:
    cells: list
    best_index: int
    select_metric: str

    @property
    def best(self) -> dict:
        return self.cells[self.best_index]


def select_best(cells, metric: str) -> int:
    """Index of the best cell; maximize AP, minimize the rest; first wins ties."""
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}")
    sign = 1.0 if HIGHER_IS_BETTER[metric] else -1.0
    best, best_val = -1, -math.inf
    for i, doc in enumerate(cells):
        v = doc["mean"][metric]
        if v is None or math.isnan(v):
            continue
        if sign * v > best_val:
            best, best_val = i, sign * v
    if best < 0:
        raise NumericalError("every grid cell failed")
    return best


def grid_search(data: Dataset, base: TrainConfig, grid: dict, plan: FoldPlan,
                select_metric: str = "ap", cell_dir=None, workers: int = 1) -> GridResult:
    cells = list(grid_cells(grid))
    groups = {}
    for cell in cells:
        groups.setdefault((cell["K"], cell["h"]), []).append(cell)
    if cell_dir:
        os.makedirs(cell_dir, exist_ok=True)
    jobs = [(data, plan, base, g, cell_dir) for g in groups.values()]
    docs = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_group_job, jobs):
                docs.update(part)
    else:
        for job in jobs:
            docs.update(_group_job(job))
    ordered = [docs[cell_key(c)] for c in cells]
    return GridResult(ordered, select_best(ordered, select_metric), select_metric)


def write_grid_csv(path, result: GridResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = list(GRID_KEYS) + ["status"]
        for m in METRICS:
            head += [f"{m}_mean", f"{m}_sd", f"{m}_display"]
        head.append("selected")
        w.writerow(head)
        for i, doc in enumerate(result.cells):
            row = [repr(doc["cell"][k]) if k != "K" else str(doc["cell"][k]) for k in GRID_KEYS]
            row.append(doc["status"])
            for m in METRICS:
                mu, sd = doc["mean"][m], doc["sd"][m]
                row += [repr(mu), repr(sd), display(mu, sd)]
            row.append("1" if i == result.best_index else "0")
            w.writerow(row)


def read_grid_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Ablation, correlation report, traces
# ---------------------------------------------------------------------------


@dataclass
class AblationResult:
    without: CvResult
    with_corr: CvResult


def ablate_correlation(data: Dataset, config: TrainConfig, plan: FoldPlan) -> AblationResult:
    """Cross-validate twice on the same folds: alpha = 0 against ``config.alpha``."""
    if not config.alpha > 0:
        raise ValidationError("ablation needs alpha > 0 for the correlation group")
    a = cross_validate(data, config.replace(alpha=0.0), plan)
    b = cross_validate(data, config, plan)
    return AblationResult(a, b)


def write_ablation_csv(path, result: AblationResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "group", "alpha", "mean", "sd", "display"])
        for group, res in (("A", result.without), ("B", result.with_corr)):
            for m, mu, sd in res.aggregate_rows():
                w.writerow([m, group, repr(res.config.alpha), repr(mu), repr(sd), display(mu, sd)])


def write_matrix_csv(path, M, names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, np.asarray(M)):
            w.writerow([name] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[np.ndarray, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]]), names


def correlation_report(model: MlTskModel, data: Dataset):
    """Pearson matrices between consequent columns and between label rows."""
    if data.n_labels != model.n_labels:
        raise ValidationError(f"model has {model.n_labels} labels, dataset {data.n_labels}")
    return correlation_table(model.consequents.T), correlation_table(data.labels)


def write_trace_csv(path, report: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "objective", "df", "b"])
        b = report.get("b_trace", [])
        for t, (obj, df) in enumerate(zip(report["objective_trace"], report["df_trace"]), 1):
            w.writerow([t, repr(obj), repr(df), repr(b[t]) if t < len(b) else ""])


def save_fold_models(out_dir, result: CvResult) -> list:
    paths = []
    for f, model in enumerate(result.models):
        d = os.path.join(out_dir, f"fold_{f}")
        os.makedirs(d, exist_ok=True)
        p = os.path.join(d, "model.json")
        save_model(model, p)
        paths.append(p)
    return paths


def plan_for(data: Dataset, fold_count: int, seed: int) -> FoldPlan:
    return make_folds(data.n_instances, fold_count, seed)


def metrics_report_dict(rep: MetricsReport) -> dict:
    return {**rep.as_dict(), "skipped_instances": dict(rep.skipped_instances)}
