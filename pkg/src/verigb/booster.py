"""A small squared-loss gradient-boosting trainer producing exact-rational models.

Each stage fits a CART tree to the current residuals by exhaustive search over
midpoints between consecutive distinct feature values. Leaf weights are
``learning_rate * mean residual``, truncated toward zero onto a fixed decimal
grid so that denominators stay bounded as stages accumulate. Classification is
one-vs-rest: one regressor per class, fit to one-hot targets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import Classifier, DecisionTree, FeatureKind, FeatureSpec, Internal, Leaf, Model, NodeCondition, Regressor, eval_regressor
from .numbers import as_rational, as_vector, format_rational, quantize_toward_zero

WEIGHT_GRID = 10**6


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 10
    max_depth: int = 3
    learning_rate: Fraction = Fraction(1, 10)
    task: str = "classification"
    seed: int = 0
    min_samples_split: int = 2

    def __post_init__(self):
        object.__setattr__(self, "learning_rate", as_rational(self.learning_rate))
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.task not in ("regression", "classification"):
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class Dataset:
    features: tuple[FeatureSpec, ...]
    rows: list[tuple[Fraction, ...]]
    targets: list
    task: str = "classification"
    class_labels: tuple[str, ...] = ()
    target_name: str = "target"

    def __post_init__(self):
        m = len(self.features)
        for k, row in enumerate(self.rows):
            if len(row) != m:
                raise ValueError(f"row {k} has {len(row)} values, expected {m}")
        if len(self.rows) != len(self.targets):
            raise ValueError("rows and targets differ in length")
        if self.task == "classification":
            c = self.n_classes
            for k, t in enumerate(self.targets):
                if not 0 <= t < c:
                    raise ValueError(f"row {k}: class index {t} outside 0..{c - 1}")

    @property
    def n_classes(self) -> int:
        if self.class_labels:
            return len(self.class_labels)
        return max(self.targets) + 1 if self.targets else 0

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(
            self.features,
            [self.rows[i] for i in indices],
            [self.targets[i] for i in indices],
            self.task,
            self.class_labels,
            self.target_name,
        )


# ---------------------------------------------------------------- CART


class _Grower:
    def __init__(self, X: np.ndarray, exact_rows: Sequence[Sequence[Fraction]], cfg: TrainConfig):
        self.X = X
        self.rows = exact_rows
        self.cfg = cfg
        self.order = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]

    def best_split(self, idx: np.ndarray, r: np.ndarray):
        """(feature, threshold) maximising squared-error reduction, or None."""
        n = len(idx)
        if n < self.cfg.min_samples_split:
            return None
        total = r[idx].sum()
        base = total * total / n
        best_gain, best = 1e-12, None
        mask = np.zeros(len(self.X), dtype=bool)
        mask[idx] = True
        for f in range(self.X.shape[1]):
            order = self.order[f][mask[self.order[f]]]
            xs = self.X[order, f]
            csum = np.cumsum(r[order])
            cut = np.nonzero(xs[1:] != xs[:-1])[0]
            if len(cut) == 0:
                continue
            nl = cut + 1
            left = csum[cut]
            right = total - left
            gain = left * left / nl + right * right / (n - nl) - base
            k = int(np.argmax(gain))
            # ties: keep the lowest feature, then the lowest threshold
            if gain[k] > best_gain * (1 + 1e-12):
                best_gain = gain[k]
                lo = self.rows[order[cut[k]]][f]
                hi = self.rows[order[cut[k] + 1]][f]
                best = (f, (lo + hi) / 2)
        return best

    def grow(self, residuals: Sequence[Fraction]) -> DecisionTree:
        r = np.array([float(v) for v in residuals])
        nodes: dict[int, object] = {}
        lr = self.cfg.learning_rate

        def build(idx: np.ndarray, depth: int) -> int:
            nid = len(nodes)
            nodes[nid] = None
            split = self.best_split(idx, r) if depth < self.cfg.max_depth else None
            if split is None:
                mean = sum((residuals[i] for i in idx), Fraction(0)) / len(idx)
                nodes[nid] = Leaf(quantize_toward_zero(lr * mean, WEIGHT_GRID))
                return nid
            f, t = split
            go_left = np.array([self.rows[i][f] <= t for i in idx], dtype=bool)
            pos = build(idx[go_left], depth + 1)
            neg = build(idx[~go_left], depth + 1)
            nodes[nid] = Internal(NodeCondition(f, t), pos, neg)
            return nid

        build(np.arange(len(residuals)), 0)
        return DecisionTree(nodes, 0)


def _boost(data: Dataset, targets: Sequence[Fraction], cfg: TrainConfig) -> Regressor:
    X = np.array([[float(v) for v in row] for row in data.rows], dtype=float)
    grower = _Grower(X, data.rows, cfg)
    base = sum(targets, Fraction(0)) / len(targets)
    preds = [base] * len(targets)
    trees = []
    for _ in range(cfg.n_trees):
        residuals = [t - p for t, p in zip(targets, preds)]
        tree = grower.grow(residuals)
        trees.append(tree)
        reg = Regressor((tree,), Fraction(0))
        preds = [p + eval_regressor(reg, row) for p, row in zip(preds, data.rows)]
    return Regressor(tuple(trees), base)


def train_regressor(data: Dataset, cfg: TrainConfig) -> Model:
    if cfg.task != "regression":
        raise ValueError("train_regressor needs task='regression'")
    if len(data.rows) < 2:
        raise ValueError("need at least 2 rows")
    targets = [as_rational(t) for t in data.targets]
    reg = _boost(data, targets, cfg)
    meta = _metadata(cfg, data)
    return Model(tuple(data.features), reg, meta)


def train_classifier(data: Dataset, cfg: TrainConfig) -> Model:
    if cfg.task != "classification":
        raise ValueError("train_classifier needs task='classification'")
    c = data.n_classes
    present = set(data.targets)
    if c < 2 or len(present) < 2:
        raise ValueError("classification needs at least 2 classes in the data")
    missing = sorted(set(range(c)) - present)
    if missing:
        raise ValueError(f"classes {missing} have no training rows")
    regs = []
    for k in range(c):
        onehot = [Fraction(1 if t == k else 0) for t in data.targets]
        regs.append(_boost(data, onehot, cfg))
    labels = data.class_labels or tuple(str(k) for k in range(c))
    return Model(tuple(data.features), Classifier(tuple(regs), tuple(labels)), _metadata(cfg, data))


def _metadata(cfg: TrainConfig, data: Dataset) -> dict[str, str]:
    return {
        "trainer": "verigb.booster",
        "n_trees": str(cfg.n_trees),
        "max_depth": str(cfg.max_depth),
        "learning_rate": format_rational(cfg.learning_rate),
        "seed": str(cfg.seed),
        "rows": str(len(data.rows)),
    }


def truncate(model: Model, n_trees: int) -> Model:
    """The model after its first ``n_trees`` boosting stages (identical to training fewer)."""
    def cut(r: Regressor) -> Regressor:
        return Regressor(r.trees[:n_trees], r.base_score)

    if isinstance(model.payload, Classifier):
        payload = Classifier(tuple(cut(r) for r in model.payload.regressors), model.payload.class_labels)
    else:
        payload = cut(model.payload)
    meta = dict(model.metadata, n_trees=str(n_trees))
    return Model(model.features, payload, meta)


def train(data: Dataset, cfg: TrainConfig) -> Model:
    return train_classifier(data, cfg) if cfg.task == "classification" else train_regressor(data, cfg)


def accuracy(model: Model, data: Dataset) -> Fraction:
    from .model import predict

    hits = sum(1 for row, t in zip(data.rows, data.targets) if predict(model, row) == t)
    return Fraction(hits, len(data.rows))


def mse(model: Model, data: Dataset) -> Fraction:
    from .model import predict

    errs = [(predict(model, row) - as_rational(t)) ** 2 for row, t in zip(data.rows, data.targets)]
    return sum(errs, Fraction(0)) / len(errs)


# ---------------------------------------------------------------- synthetic data


def _int_features(m: int, lower: int, upper: int, prefix: str = "f") -> tuple[FeatureSpec, ...]:
    return tuple(
        FeatureSpec(i, FeatureKind.INTEGER, Fraction(lower), Fraction(upper), f"{prefix}{i}") for i in range(m)
    )


def synth_dataset(kind: str, n: int, seed: int = 0, n_features: Optional[int] = None) -> Dataset:
    """Deterministic synthetic data.

    ``blobs``: 3 overlapping Gaussian classes on integer features in 0..31.
    ``rings``: 2 classes by distance from the centre (not linearly separable),
    integer features in 0..63. ``housing-like``: 6 integer square-footage
    features and a price target rounded to cents.
    """
    if n < 10:
        raise ValueError("n must be at least 10")
    rng = np.random.default_rng(seed)
    if kind == "blobs":
        m = n_features or 4
        centres = rng.uniform(8, 24, size=(3, m))
        labels = np.arange(n) % 3
        pts = centres[labels] + rng.normal(0, 4.0, size=(n, m))
        pts = np.clip(np.rint(pts), 0, 31).astype(int)
        rows = [tuple(Fraction(int(v)) for v in p) for p in pts]
        return Dataset(_int_features(m, 0, 31), rows, [int(c) for c in labels], "classification", ("c0", "c1", "c2"))
    if kind == "rings":
        m = n_features or 2
        radius = rng.uniform(0, 30, size=n)
        angle = rng.uniform(0, 2 * np.pi, size=n)
        pts = np.zeros((n, m))
        pts[:, 0] = 32 + radius * np.cos(angle)
        pts[:, 1] = 32 + radius * np.sin(angle)
        if m > 2:
            pts[:, 2:] = rng.uniform(0, 63, size=(n, m - 2))
        pts = np.clip(np.rint(pts), 0, 63).astype(int)
        labels = ((radius // 8) % 2).astype(int)
        rows = [tuple(Fraction(int(v)) for v in p) for p in pts]
        return Dataset(_int_features(m, 0, 63), rows, [int(c) for c in labels], "classification", ("inner", "outer"))
    if kind == "housing-like":
        m = 6
        names = ("sqft_living", "sqft_lot", "sqft_above", "sqft_basement", "sqft_living15", "sqft_lot15")
        living = rng.integers(400, 5000, size=n)
        lot = rng.integers(1000, 20000, size=n)
        above = (living * rng.uniform(0.6, 1.0, size=n)).astype(int)
        basement = living - above
        living15 = np.clip(living + rng.integers(-500, 500, size=n), 400, 6000)
        lot15 = np.clip(lot + rng.integers(-2000, 2000, size=n), 1000, 22000)
        cols = np.stack([living, lot, above, basement, living15, lot15], axis=1)
        bounds = [(400, 6000), (1000, 22000), (0, 6000), (0, 6000), (400, 6000), (1000, 22000)]
        features = tuple(
            FeatureSpec(i, FeatureKind.INTEGER, Fraction(lo), Fraction(hi), names[i]) for i, (lo, hi) in enumerate(bounds)
        )
        price = 50000 + 250 * living + 3 * lot + 40 * living15 + rng.normal(0, 40000, size=n)
        targets = [Fraction(int(round(p * 100)), 100) for p in price]
        rows = [tuple(Fraction(int(v)) for v in c) for c in cols]
        return Dataset(features, rows, targets, "regression", (), "price")
    raise ValueError(f"unknown dataset kind {kind!r}")


# ---------------------------------------------------------------- files


def schema_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".schema.json")


def save_dataset(data: Dataset, csv_path) -> None:
    """CSV with a header row plus a ``<file>.schema.json`` sidecar."""
    names = [f.label for f in data.features]
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [data.target_name])
        for row, t in zip(data.rows, data.targets):
            w.writerow([format_rational(v) for v in row] + [t if isinstance(t, int) else format_rational(as_rational(t))])
    schema = {
        "task": data.task,
        "target": data.target_name,
        "class_labels": list(data.class_labels),
        "features": [
            {
                "name": f.label,
                "kind": f.kind.value,
                "lower": None if f.lower is None else format_rational(f.lower),
                "upper": None if f.upper is None else format_rational(f.upper),
            }
            for f in data.features
        ],
    }
    schema_path(csv_path).write_text(json.dumps(schema, indent=1) + "\n")


def load_dataset(csv_path, schema=None) -> Dataset:
    schema_file = Path(schema) if schema else schema_path(csv_path)
    meta = json.loads(schema_file.read_text())
    target = meta["target"]
    task = meta.get("task", "classification")
    specs = meta["features"]
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        raw_rows = list(reader)
    features = tuple(
        FeatureSpec(
            i,
            FeatureKind(s.get("kind", "real")),
            None if s.get("lower") is None else as_rational(s["lower"]),
            None if s.get("upper") is None else as_rational(s["upper"]),
            s["name"],
        )
        for i, s in enumerate(specs)
    )
    rows, targets = [], []
    labels = tuple(meta.get("class_labels") or ())
    for k, rec in enumerate(raw_rows, start=2):
        try:
            rows.append(as_vector(rec[s["name"]] for s in specs))
            t = rec[target]
        except KeyError as exc:
            raise ValueError(f"{csv_path}: line {k}: missing column {exc}") from None
        if task == "classification":
            targets.append(labels.index(t) if labels and t in labels else int(t))
        else:
            targets.append(as_rational(t))
    return Dataset(features, rows, targets, task, labels, target)
