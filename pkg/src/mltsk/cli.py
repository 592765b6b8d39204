"""Command-line interface: ``mltsk {train,predict,cv,grid,ablate,corr-report,stats}``.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
validation error. Every command that writes outputs also writes the
resolved configuration to ``config.json`` in its output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import experiment as ex
from .dataset import Dataset, load_dataset, read_mulan_labels
from .errors import MlTskError, NumericalError, ParseError, UnsupportedVersionError, ValidationError
from .evaluation import HIGHER_IS_BETTER, METRICS, RankTable, bonferroni_dunn_cd, evaluate, friedman_statistic
from .model import load_model, predict_labels, predict_scores, save_model, train
from .solver import TrainConfig

logger = logging.getLogger("mltsk")

HYPER_FLAGS = (
    ("K", int), ("h", float), ("alpha", float), ("beta", float), ("gamma", float),
    ("tau", float), ("fuzzifier", float), ("fcm_tol", float), ("fcm_max_iter", int),
    ("fcm_restarts", int), ("solver_tol", float), ("solver_max_iter", int),
)


class UsageError(MlTskError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _read_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    unknown = set(doc) - {"data", "train", "grid", "folds", "seed", "select_metric", "workers"}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _parse_labels(value):
    if value is None:
        return None
    if isinstance(value, list):
        return [str(v) for v in value]
    if value.lower().endswith(".xml"):
        return read_mulan_labels(value)
    names = [v.strip() for v in value.split(",") if v.strip()]
    if not names:
        raise ValidationError("--labels is empty")
    return names


def _float_list(text, cast=float):
    try:
        vals = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse list {text!r}") from None
    if not vals:
        raise ValidationError("grid lists must be non-empty")
    return vals


def resolve(args) -> dict:
    """Merge the config file with command-line overrides."""
    doc = _read_config(getattr(args, "config", None))
    data = dict(doc.get("data", {}))
    for key, attr in (("path", "data"), ("format", "format"), ("labels", "labels"),
                      ("label_count", "label_count")):
        v = getattr(args, attr, None)
        if v is not None:
            data[key] = v
    train_cfg = dict(doc.get("train", {}))
    for name, _ in HYPER_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            train_cfg[name] = v
    seed = args.seed if getattr(args, "seed", None) is not None else doc.get("seed", 0)
    train_cfg["seed"] = int(seed)
    grid = {k: list(v) for k, v in doc.get("grid", ex.DEFAULT_GRID).items()}
    for key in ex.GRID_KEYS:
        v = getattr(args, f"grid_{key}", None)
        if v is not None:
            grid[key] = _float_list(v, int if key == "K" else float)
    out = {
        "data": data,
        "train": TrainConfig.from_dict(train_cfg).to_dict(),
        "grid": grid,
        "folds": int(getattr(args, "folds", None) or doc.get("folds", 5)),
        "seed": int(seed),
        "select_metric": getattr(args, "select_metric", None) or doc.get("select_metric", "ap"),
        "workers": int(getattr(args, "workers", None) or doc.get("workers", 1)),
    }
    if out["folds"] < 2:
        raise ValidationError("fold count must be at least 2")
    if out["select_metric"] not in METRICS:
        raise ValidationError(f"select metric must be one of {METRICS}")
    if out["workers"] < 1:
        raise ValidationError("workers must be positive")
    for key in ex.GRID_KEYS:
        if not grid.get(key):
            raise ValidationError(f"grid list for {key!r} is empty")
    return out


def _load(spec_data) -> Dataset:
    path = spec_data.get("path")
    if not path:
        raise UsageError("--data is required")
    if not os.path.exists(path):
        raise ValidationError(f"dataset not found: {path}")
    labels = _parse_labels(spec_data.get("labels"))
    count = spec_data.get("label_count")
    return load_dataset(path, spec_data.get("format"), labels,
                        None if count is None else int(count))


def _prepare_out(path):
    if not path:
        raise UsageError("--out is required")
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _dataset_name(spec_data):
    return os.path.splitext(os.path.basename(spec_data.get("path", "data")))[0]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    spec = resolve(args)
    data = _load(spec["data"])
    cfg = TrainConfig.from_dict(spec["train"])
    model = train(data, cfg)
    out = _prepare_out(args.out)
    save_model(model, os.path.join(out, "model.json"))
    ex.write_trace_csv(os.path.join(out, "trace.csv"), model.training_report)
    rep = model.training_report
    scores = predict_scores(model, data.features)
    fit_metrics = evaluate(scores, data.labels, cfg.tau)
    summary = {
        "iterations": rep["iterations"],
        "converged": rep["converged"],
        "best_iteration": rep["best_iteration"],
        "initial_objective": rep["initial_objective"],
        "final_objective": rep["objective_trace"][-1] if rep["objective_trace"] else None,
        "lipschitz": rep["lipschitz"],
        "lipschitz_converged": rep["lipschitz_converged"],
        "min_curvature": rep["min_curvature"],
        "convex": rep["convex"],
        "training_metrics": fit_metrics.as_dict(),
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    _write_json(os.path.join(out, "config.json"), spec)
    print(f"trained K={cfg.K} in {rep['iterations']} iterations "
          f"(converged={rep['converged']}); model written to {out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    spec = resolve(args)
    if spec["data"].get("label_count") is None and spec["data"].get("labels") is None:
        spec["data"]["label_count"] = model.n_labels
    data = _load(spec["data"])
    if data.n_labels != model.n_labels:
        raise ValidationError(f"dataset has {data.n_labels} labels, model {model.n_labels}")
    scores = predict_scores(model, data.features)
    pred = predict_labels(scores, model.tau)
    out = _prepare_out(args.out)
    for name, M, fmt in (("scores.csv", scores, repr), ("labels.csv", pred, str)):
        with open(os.path.join(out, name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance"] + list(model.label_names))
            for j in range(M.shape[1]):
                w.writerow([j] + [fmt(v.item()) for v in M[:, j]])
    rep = evaluate(scores, data.labels, model.tau)
    with open(os.path.join(out, "metrics.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "fold", "metric", "value", "sd", "display"])
        for m in METRICS:
            v = getattr(rep, m)
            w.writerow([_dataset_name(spec["data"]), "all", m, repr(v), "", ex.display(v)])
    spec["model"] = args.model
    _write_json(os.path.join(out, "config.json"), spec)
    print(f"predicted {data.n_instances} instances; outputs in {out}")
    return 0


def cmd_cv(args) -> int:
    spec = resolve(args)
    data = _load(spec["data"])
    cfg = TrainConfig.from_dict(spec["train"])
    plan = ex.plan_for(data, spec["folds"], spec["seed"])
    result = ex.cross_validate(data, cfg, plan, keep_models=args.save_models)
    out = _prepare_out(args.out)
    ex.write_metrics_csv(os.path.join(out, "metrics.csv"), _dataset_name(spec["data"]), result)
    if args.save_models:
        ex.save_fold_models(out, result)
    spec["fold_assignments"] = plan.assignments.tolist()
    _write_json(os.path.join(out, "config.json"), spec)
    for m in METRICS:
        print(f"{m}: {ex.display(result.mean[m], result.sd[m])}")
    return 0


def cmd_grid(args) -> int:
    spec = resolve(args)
    data = _load(spec["data"])
    base = TrainConfig.from_dict(spec["train"])
    plan = ex.plan_for(data, spec["folds"], spec["seed"])
    out = _prepare_out(args.out)
    _write_json(os.path.join(out, "config.json"), spec)
    result = ex.grid_search(data, base, spec["grid"], plan, spec["select_metric"],
                            os.path.join(out, "cells"), spec["workers"])
    ex.write_grid_csv(os.path.join(out, "grid.csv"), result)
    best = result.best
    _write_json(os.path.join(out, "best.json"), {
        "select_metric": spec["select_metric"],
        "index": result.best_index,
        "cell": best["cell"],
        "mean": best["mean"],
        "sd": best["sd"],
        "display": {m: ex.display(best["mean"][m], best["sd"][m]) for m in METRICS},
    })
    failed = sum(1 for c in result.cells if c["status"] != "ok")
    print(f"evaluated {len(result.cells)} cells ({failed} failed); best {best['cell']} "
          f"{spec['select_metric']}={ex.display(best['mean'][spec['select_metric']])}")
    return 0


def cmd_ablate(args) -> int:
    spec = resolve(args)
    data = _load(spec["data"])
    cfg = TrainConfig.from_dict(spec["train"])
    plan = ex.plan_for(data, spec["folds"], spec["seed"])
    result = ex.ablate_correlation(data, cfg, plan)
    out = _prepare_out(args.out)
    ex.write_ablation_csv(os.path.join(out, "ablation.csv"), result)
    meta = {
        group: {
            "alpha": res.config.alpha,
            "fold_assignments": res.plan.assignments.tolist(),
            "plan_digest": ex.plan_digest(res.plan),
        }
        for group, res in (("A", result.without), ("B", result.with_corr))
    }
    _write_json(os.path.join(out, "ablation_meta.json"), meta)
    _write_json(os.path.join(out, "config.json"), spec)
    for m in METRICS:
        print(f"{m}: A {ex.display(result.without.mean[m], result.without.sd[m])}  "
              f"B {ex.display(result.with_corr.mean[m], result.with_corr.sd[m])}")
    return 0


def cmd_corr_report(args) -> int:
    model = load_model(args.model)
    spec = resolve(args)
    if spec["data"].get("label_count") is None and spec["data"].get("labels") is None:
        spec["data"]["label_count"] = model.n_labels
    data = _load(spec["data"])
    p_corr, y_corr = ex.correlation_report(model, data)
    out = _prepare_out(args.out)
    ex.write_matrix_csv(os.path.join(out, "p_correlation.csv"), p_corr, model.label_names)
    ex.write_matrix_csv(os.path.join(out, "y_correlation.csv"), y_corr, model.label_names)
    spec["model"] = args.model
    _write_json(os.path.join(out, "config.json"), spec)
    print(f"correlation matrices written to {out}")
    return 0


def read_metric_table(path):
    """CSV with a ``dataset`` column followed by one column per method."""
    if not os.path.exists(path):
        raise ValidationError(f"table not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2 or len(rows[0]) < 3:
        raise ParseError(f"{path}: need a header and at least two method columns")
    methods = [c.strip() for c in rows[0][1:]]
    datasets, values = [], []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(rows[0]):
            raise ParseError(f"{path}: expected {len(rows[0])} columns, got {len(r)}", line=i)
        try:
            values.append([float(v) for v in r[1:]])
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", line=i) from None
        datasets.append(r[0].strip())
    return np.array(values), methods, datasets


def cmd_stats(args) -> int:
    S, methods, datasets = read_metric_table(args.table)
    higher = HIGHER_IS_BETTER[args.metric] if args.metric else not args.lower_is_better
    table = RankTable(S, methods, datasets, higher)
    fr = friedman_statistic(table)
    cd = bonferroni_dunn_cd(table.k, table.M, args.q_alpha)
    best = int(np.argmin(table.average_ranks))
    report = {
        "k": table.k,
        "M": table.M,
        "higher_is_better": higher,
        "methods": methods,
        "average_ranks": [float(r) for r in table.average_ranks],
        "chi2": fr.chi2,
        "F_F": fr.F if math.isfinite(fr.F) else "inf",
        "degenerate": fr.degenerate,
        "degenerate_reason": fr.reason,
        "q_alpha": args.q_alpha,
        "CD": cd,
        "CD_display": f"{cd:.4f}",
        "best_method": methods[best],
        "within_cd_of_best": [m for m, r in zip(methods, table.average_ranks)
                              if r - table.average_ranks[best] <= cd],
    }
    if args.critical_value is not None:
        report["critical_value"] = args.critical_value
        report["reject_null"] = bool(fr.F > args.critical_value)
    out = _prepare_out(args.out)
    _write_json(os.path.join(out, "stats.json"), report)
    with open(os.path.join(out, "ranks.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "average_rank", "display", "within_cd_of_best"])
        for m, r in zip(methods, table.average_ranks):
            w.writerow([m, repr(float(r)), f"{r:.4f}", int(m in report["within_cd_of_best"])])
    _write_json(os.path.join(out, "config.json"), {
        "table": args.table, "q_alpha": args.q_alpha, "higher_is_better": higher,
        "critical_value": args.critical_value,
    })
    print(f"F_F = {report['F_F']}, CD = {cd:.4f}, best = {methods[best]}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _data_flags(p):
    p.add_argument("--data", help="dataset path (.csv, .arff or a .json descriptor)")
    p.add_argument("--format", choices=("csv", "arff"))
    p.add_argument("--labels", help="comma-separated label names or a MULAN .xml file")
    p.add_argument("--label-count", type=int, dest="label_count")


def _common(p, hyper=True):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    _data_flags(p)
    if hyper:
        for name, cast in HYPER_FLAGS:
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, type=cast)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mltsk", description="Multi-label TSK fuzzy system")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one model")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a dataset with a saved model")
    p.add_argument("--model", required=True)
    _common(p, hyper=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="k-fold cross-validation at fixed hyperparameters")
    _common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--save-models", action="store_true")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("grid", help="grid search by cross-validation")
    _common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--select-metric", choices=METRICS, dest="select_metric")
    for key in ex.GRID_KEYS:
        p.add_argument(f"--grid-{key}", dest=f"grid_{key}", help="comma-separated values")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("ablate", help="alpha = 0 against alpha > 0 on shared folds")
    _common(p)
    p.add_argument("--folds", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("corr-report", help="Pearson matrices of P columns and label rows")
    p.add_argument("--model", required=True)
    _common(p, hyper=False)
    p.set_defaults(func=cmd_corr_report)

    p = sub.add_parser("stats", help="Friedman test and Bonferroni-Dunn critical difference")
    p.add_argument("--table", required=True, help="CSV: dataset column, one column per method")
    p.add_argument("--q-alpha", type=float, required=True, dest="q_alpha")
    p.add_argument("--metric", choices=METRICS, help="sets the ranking direction")
    p.add_argument("--lower-is-better", action="store_true")
    p.add_argument("--critical-value", type=float, dest="critical_value")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except (UsageError, ValidationError, ParseError, UnsupportedVersionError) as exc:
        print(f"mltsk: error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"mltsk: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, MlTskError, ArithmeticError, OSError) as exc:
        print(f"mltsk: runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
