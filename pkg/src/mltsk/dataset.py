"""Multi-label dataset ingestion, standardization and fold planning.

Matrices follow the column-per-instance convention used throughout the
package: ``features`` is ``D x N`` and ``labels`` is ``L x N``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParseError, UnsupportedAttributeError, ValidationError

STD_FLOOR = 1e-12

DESCRIPTOR_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (D x N) and binary label matrix (L x N)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list = field(default_factory=list)
    label_names: list = field(default_factory=list)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        Y = np.asarray(self.labels, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValidationError("features and labels must be 2-D matrices")
        D, N = X.shape
        L, NY = Y.shape
        if D < 1 or L < 1 or N < 1:
            raise ValidationError(f"empty dataset: D={D}, L={L}, N={N}")
        if NY != N:
            raise ValidationError(
                f"features have {N} instances but labels have {NY}"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("features contain NaN or Inf")
        if not np.all((Y == 0.0) | (Y == 1.0)):
            raise ValidationError("label entries must be exactly 0 or 1")
        fnames = list(self.feature_names) or [f"f{i}" for i in range(D)]
        lnames = list(self.label_names) or [f"label{i}" for i in range(L)]
        if len(fnames) != D:
            raise ValidationError(f"{len(fnames)} feature names for D={D}")
        if len(lnames) != L:
            raise ValidationError(f"{len(lnames)} label names for L={L}")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "label_names", lnames)

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[0]

    @property
    def n_instances(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        """Return the dataset restricted to the instance columns in ``index``."""
        index = np.asarray(index)
        return Dataset(
            self.features[:, index],
            self.labels[:, index],
            self.feature_names,
            self.label_names,
        )

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.feature_names, self.label_names)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_label(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if value != 0.0 and value != 1.0:
        raise ValidationError(
            f"row {row}, column {col}: label value {text.strip()!r} is not 0 or 1"
        )
    return value


def load_csv(path, label_count: int) -> Dataset:
    """Load a CSV file whose last ``label_count`` columns are labels.

    A header row is recognised when any cell of the first row is not
    numeric. Row and column numbers in error messages are 1-based and refer
    to physical lines of the file.
    """
    if label_count < 1:
        raise ValidationError("label_count must be at least 1")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: file is empty")

    header = None
    first_line, first = rows[0]
    if not all(_is_number(c) for c in first):
        header = [c.strip() for c in first]
        rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no data rows")

    width = len(header) if header is not None else len(rows[0][1])
    if width <= label_count:
        raise ValidationError(
            f"{path}: {width} columns cannot hold {label_count} labels plus features"
        )
    n_feat = width - label_count
    feats = np.empty((len(rows), n_feat))
    labs = np.empty((len(rows), label_count))
    for r, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(f"expected {width} columns, found {len(cells)}", line=line)
        for c in range(n_feat):
            try:
                feats[r, c] = float(cells[c])
            except ValueError:
                raise ParseError(
                    f"column {c + 1}: cannot parse {cells[c].strip()!r} as a number",
                    line=line,
                ) from None
        for c in range(label_count):
            labs[r, c] = _parse_label(cells[n_feat + c], line, n_feat + c + 1)
    if not np.all(np.isfinite(feats)):
        bad = int(np.argwhere(~np.isfinite(feats))[0, 0])
        raise ValidationError(f"{path}: non-finite feature value on line {rows[bad][0]}")

    fnames = header[:n_feat] if header else []
    lnames = header[n_feat:] if header else []
    return Dataset(feats.T, labs.T, fnames, lnames)


def write_csv(data: Dataset, path, header: bool = True) -> None:
    """Write ``data`` as features-then-labels CSV at full round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(list(data.feature_names) + list(data.label_names))
        X, Y = data.features, data.labels
        for n in range(data.n_instances):
            w.writerow([repr(float(v)) for v in X[:, n]] + [str(int(v)) for v in Y[:, n]])


# ---------------------------------------------------------------------------
# ARFF (MULAN dialect)
# ---------------------------------------------------------------------------

_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_arff_name(rest: str):
    rest = rest.strip()
    if rest[:1] in ("'", '"'):
        q = rest[0]
        end = rest.find(q, 1)
        while end > 0 and rest[end - 1] == "\\":
            end = rest.find(q, end + 1)
        if end < 0:
            return None, None
        return rest[1:end].replace("\\" + q, q), rest[end + 1:].strip()
    parts = rest.split(None, 1)
    if len(parts) < 2:
        return parts[0] if parts else None, ""
    return parts[0], parts[1].strip()


def _parse_nominal(spec: str):
    inner = spec.strip()[1:-1]
    return [v.strip().strip("'\"") for v in inner.split(",")]


def _arff_value(token: str, line: int) -> float:
    token = token.strip().strip("'\"")
    if token == "?":
        raise ValidationError(f"line {line}: missing values ('?') are not supported")
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"cannot parse value {token!r}", line=line) from None


def load_arff(data_path, label_names: Sequence[str] | None = None,
              label_count: int | None = None) -> Dataset:
    """Load a MULAN-style ARFF file.

    Parameters
    ----------
    data_path : path-like
        The ``.arff`` file.
    label_names : sequence of str, optional
        Attributes to treat as labels, in output order.
    label_count : int, optional
        Alternative to ``label_names``: the last ``label_count`` attributes
        are labels (MEKA convention).

    Returns
    -------
    Dataset
        Remaining numeric attributes become feature rows in header order.
    """
    if (label_names is None) == (label_count is None):
        raise ValidationError("give exactly one of label_names or label_count")

    attrs = []  # (name, kind, nominal values)
    rows = []
    in_data = False
    with open(data_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    continue
                if low.startswith("@attribute"):
                    name, typ = _split_arff_name(line[len("@attribute"):])
                    if not name or not typ:
                        raise ParseError("malformed @attribute declaration", line=lineno)
                    if typ.startswith("{"):
                        attrs.append((name, "nominal", _parse_nominal(typ)))
                    elif typ.lower() in _NUMERIC_TYPES:
                        attrs.append((name, "numeric", None))
                    else:
                        attrs.append((name, typ.split()[0].lower(), None))
                    continue
                if low.startswith("@data"):
                    in_data = True
                    continue
                raise ParseError(f"unexpected header line {line[:40]!r}", line=lineno)
            rows.append((lineno, line))

    if not attrs:
        raise ParseError(f"{data_path}: no @attribute declarations")
    if not in_data:
        raise ParseError(f"{data_path}: missing @data section")
    if not rows:
        raise ValidationError(f"{data_path}: no data rows")

    names = [a[0] for a in attrs]
    if label_count is not None:
        if not 1 <= label_count < len(attrs):
            raise ValidationError(f"label_count {label_count} invalid for {len(attrs)} attributes")
        label_names = names[len(attrs) - label_count:]
    label_names = list(label_names)
    position = {n: i for i, n in enumerate(names)}
    for n in label_names:
        if n not in position:
            raise ValidationError(f"label {n!r} is not an attribute of {data_path}")
    label_idx = [position[n] for n in label_names]
    label_set = set(label_idx)
    for i in label_idx:
        name, kind, values = attrs[i]
        if kind == "nominal" and not set(values) <= {"0", "1"}:
            raise UnsupportedAttributeError(f"label {name!r} has nominal values {values}")
        if kind not in ("nominal", "numeric"):
            raise UnsupportedAttributeError(f"label {name!r} has type {kind}")
    feat_idx = [i for i in range(len(attrs)) if i not in label_set]
    for i in feat_idx:
        name, kind, _ = attrs[i]
        if kind != "numeric":
            raise UnsupportedAttributeError(f"feature {name!r} has non-numeric type {kind}")
    if not feat_idx:
        raise ValidationError("no feature attributes left after removing labels")

    n_attr = len(attrs)
    table = np.zeros((len(rows), n_attr))
    for r, (lineno, line) in enumerate(rows):
        if line.startswith("{"):
            if not line.endswith("}"):
                raise ParseError("unterminated sparse row", line=lineno)
            body = line[1:-1].strip()
            if body:
                for item in body.split(","):
                    parts = item.split(None, 1)
                    if len(parts) != 2:
                        raise ParseError(f"malformed sparse entry {item.strip()!r}", line=lineno)
                    try:
                        j = int(parts[0])
                    except ValueError:
                        raise ParseError(f"bad sparse index {parts[0]!r}", line=lineno) from None
                    if not 0 <= j < n_attr:
                        raise ParseError(f"sparse index {j} out of range", line=lineno)
                    table[r, j] = _arff_value(parts[1], lineno)
        else:
            cells = next(csv.reader([line], skipinitialspace=True))
            if len(cells) != n_attr:
                raise ParseError(f"expected {n_attr} values, found {len(cells)}", line=lineno)
            for j, cell in enumerate(cells):
                table[r, j] = _arff_value(cell, lineno)
    labs = table[:, label_idx]
    bad = np.argwhere((labs != 0.0) & (labs != 1.0))
    if bad.size:
        r, c = bad[0]
        raise ValidationError(
            f"line {rows[r][0]}: label {label_names[c]!r} has value {labs[r, c]!r}, not 0 or 1"
        )
    return Dataset(
        table[:, feat_idx].T,
        labs.T,
        [names[i] for i in feat_idx],
        label_names,
    )


def read_mulan_labels(xml_path) -> list:
    """Label names from a MULAN ``.xml`` label file, in document order."""
    import xml.etree.ElementTree as ET

    try:
        root = ET.parse(xml_path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"{xml_path}: {exc}") from None
    return [el.attrib["name"] for el in root.iter() if el.tag.split("}")[-1] == "label"]


# ---------------------------------------------------------------------------
# Descriptor sidecar
# ---------------------------------------------------------------------------


def write_descriptor(path, data_path, fmt: str, label_names=None, label_count=None,
                     name: str | None = None) -> None:
    """Write the JSON sidecar describing how to load a dataset file.

    Schema (version 1)::

        {"descriptor_version": 1, "name": str, "path": str,
         "format": "csv" | "arff", "label_count": int | null,
         "label_names": [str] | null}

    ``path`` is resolved relative to the descriptor's directory.
    """
    doc = {
        "descriptor_version": DESCRIPTOR_VERSION,
        "name": name or os.path.splitext(os.path.basename(str(data_path)))[0],
        "path": str(data_path),
        "format": fmt,
        "label_count": label_count,
        "label_names": list(label_names) if label_names is not None else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_descriptor(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    if doc.get("descriptor_version") != DESCRIPTOR_VERSION:
        raise ValidationError(f"{path}: unsupported descriptor version {doc.get('descriptor_version')!r}")
    for key in ("path", "format"):
        if key not in doc:
            raise ValidationError(f"{path}: descriptor lacks {key!r}")
    base = os.path.dirname(os.path.abspath(path))
    doc["path"] = os.path.join(base, doc["path"])
    return doc


def load_dataset(path, fmt: str | None = None, label_names=None, label_count=None) -> Dataset:
    """Dispatch on format; ``.json`` paths are read as descriptors."""
    path = str(path)
    if fmt is None and path.endswith(".json"):
        doc = read_descriptor(path)
        return load_dataset(doc["path"], doc["format"], doc.get("label_names"),
                            doc.get("label_count"))
    if fmt is None:
        fmt = "arff" if path.lower().endswith(".arff") else "csv"
    if fmt == "csv":
        if label_count is None:
            if label_names is None:
                raise ValidationError("CSV input needs a label count")
            label_count = len(label_names)
        data = load_csv(path, label_count)
        if label_names is not None:
            data = Dataset(data.features, data.labels, data.feature_names, list(label_names))
        return data
    if fmt == "arff":
        if label_names is not None:
            return load_arff(path, label_names=label_names)
        return load_arff(path, label_count=label_count)
    raise ValidationError(f"unknown dataset format {fmt!r}")


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.mean.shape[0]:
            raise ValidationError(
                f"expected {self.mean.shape[0]} features, got {X.shape[0]}"
            )
        return (X - self.mean[:, None]) / self.std[:, None]

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) * self.std[:, None] + self.mean[:, None]


def fit_standardizer(data: Dataset | np.ndarray) -> Standardizer:
    """Per-feature z-score statistics; population stddev floored at ``STD_FLOOR``."""
    X = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    mean = X.mean(axis=1)
    std = np.sqrt(((X - mean[:, None]) ** 2).mean(axis=1))
    std = np.maximum(std, STD_FLOOR)
    return Standardizer(mean, std)


def apply_standardizer(std: Standardizer, data: Dataset) -> Dataset:
    return Dataset(std.transform(data.features), data.labels,
                   data.feature_names, data.label_names)


# ---------------------------------------------------------------------------
# Folds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    """Balanced k-fold partition of ``range(n)``.

    Indices are shuffled with ``numpy.random.default_rng(seed)`` (PCG64) and
    dealt round-robin, so fold sizes differ by at most one.
    """

    fold_count: int
    assignments: np.ndarray
    seed: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for f in range(self.fold_count):
            yield self.train_index(f), self.test_index(f)


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    if k < 2:
        raise ValidationError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise ValidationError(f"cannot split {n} instances into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    assignments.setflags(write=False)
    return FoldPlan(k, assignments, seed)


_SAFE_NAME = re.compile(r"[^A-Za-z0-9_.-]+")


def safe_name(text: str) -> str:
    return _SAFE_NAME.sub("_", text).strip("_") or "dataset"
