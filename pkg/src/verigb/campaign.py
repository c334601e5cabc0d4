"""Campaign configuration, input selection and the depth/size trend experiment.

A campaign config is JSON::

    {
      "model": "model.json", "dataset": "data.csv",
      "selection": {"mode": "random-k" | "per-class-k" | "ids", "k": 20, "seed": 0, "ids": []},
      "epsilons": ["1", "3"], "delta": null, "norm": "inf", "clamp": false,
      "budget": 600, "kill_grace": 2, "width": 1, "class_width": null,
      "solver": "z3 -in -smt2", "prune": true, "output": "out/"
    }

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .booster import Dataset, TrainConfig, accuracy, synth_dataset, train, truncate
from .model import Model
from .modelio import load_model
from .booster import load_dataset
from .numbers import as_rational, format_rational
from .query import Norm, RobustnessQuery
from .report import CampaignReport
from .robustness import check_universal
from .solver import SolverConfig, default_command, solver_version


def select_inputs(data: Dataset, mode: str = "random-k", k: int = 20, seed: int = 0, ids: Sequence[int] = ()) -> list[int]:
    """Row indices to verify; deterministic given ``seed``."""
    n = len(data.rows)
    if mode == "ids":
        bad = [i for i in ids if not 0 <= i < n]
        if bad:
            raise ValueError(f"row ids out of range: {bad}")
        return list(ids)
    rng = np.random.default_rng(seed)
    if mode == "random-k":
        return sorted(int(i) for i in rng.choice(n, size=min(k, n), replace=False))
    if mode == "per-class-k":
        out = []
        for c in range(data.n_classes):
            members = [i for i, t in enumerate(data.targets) if t == c]
            if members:
                out += [members[int(j)] for j in rng.choice(len(members), size=min(k, len(members)), replace=False)]
        return sorted(out)
    raise ValueError(f"unknown selection mode {mode!r}")


@dataclass
class CampaignConfig:
    model: str
    dataset: str
    epsilons: list = field(default_factory=lambda: ["1"])
    selection: dict = field(default_factory=lambda: {"mode": "random-k", "k": 20, "seed": 0})
    delta: Optional[str] = None
    norm: str = "inf"
    clamp: bool = False
    budget: float = 600.0
    kill_grace: float = 2.0
    width: int = 1
    class_width: Optional[int] = None
    solver: Optional[str] = None
    prune: bool = True
    output: Optional[str] = None

    @classmethod
    def load(cls, path) -> "CampaignConfig":
        path = Path(path)
        raw = json.loads(path.read_text())
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown config fields {sorted(unknown)}")
        cfg = cls(**raw)
        base = path.parent
        cfg.model = str(base / cfg.model)
        cfg.dataset = str(base / cfg.dataset)
        if cfg.output:
            cfg.output = str(base / cfg.output)
        return cfg

    def solver_config(self) -> SolverConfig:
        cmd = self.solver or default_command()
        return SolverConfig(cmd, float(self.budget), float(self.kill_grace))


def run_campaign(cfg: CampaignConfig, model: Optional[Model] = None, data: Optional[Dataset] = None) -> CampaignReport:
    model = model or load_model(cfg.model)
    data = data or load_dataset(cfg.dataset)
    sel = dict(cfg.selection)
    idx = select_inputs(data, sel.get("mode", "random-k"), int(sel.get("k", 20)), int(sel.get("seed", 0)), sel.get("ids", ()))
    template = RobustnessQuery.make(
        [0] * model.n_features, cfg.epsilons[0], cfg.delta, cfg.norm, cfg.clamp
    )
    scfg = cfg.solver_config()
    ce_dir = Path(cfg.output) / "counterexamples" if cfg.output else None
    report = check_universal(
        model,
        [data.rows[i] for i in idx],
        template,
        [as_rational(e) for e in cfg.epsilons],
        scfg,
        width=cfg.width,
        class_width=cfg.class_width,
        prune=cfg.prune,
        ids=[str(i) for i in idx],
        ce_dir=ce_dir,
    )
    report.config = asdict(cfg)
    report.versions = {"verigb": __version__, "solver": solver_version(scfg), "solver_command": " ".join(scfg.command)}
    if cfg.output:
        report.write(cfg.output)
    return report


# ---------------------------------------------------------------- trend


@dataclass
class TrendConfig:
    dataset: str = "blobs"
    n: int = 300
    seeds: list = field(default_factory=lambda: [0])
    depths: list = field(default_factory=lambda: [2, 5])
    trees: list = field(default_factory=lambda: [30])
    learning_rate: str = "1/10"
    epsilon: str = "1"
    delta: Optional[str] = None
    norm: str = "inf"
    clamp: bool = True
    inputs: int = 20
    budget: float = 60.0
    kill_grace: float = 2.0
    solver: Optional[str] = None
    width: int = 4

    @classmethod
    def load(cls, path) -> "TrendConfig":
        raw = json.loads(Path(path).read_text())
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown config fields {sorted(unknown)}")
        return cls(**raw)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.solver or default_command(), float(self.budget), float(self.kill_grace))


TREND_COLUMNS = ("seed", "depth", "n_trees", "accuracy", "rho", "ce", "timeout", "unknown")


def campaign_rho(model: Model, data: Dataset, cfg: TrendConfig, seed: int) -> CampaignReport:
    idx = select_inputs(data, "random-k", cfg.inputs, seed)
    template = RobustnessQuery.make([0] * model.n_features, cfg.epsilon, cfg.delta, cfg.norm, cfg.clamp)
    return check_universal(
        model, [data.rows[i] for i in idx], template, None, cfg.solver_config(), width=cfg.width, ids=idx
    )


def _trend_row(seed, depth, n_trees, model, data, cfg) -> dict:
    task_metric = accuracy(model, data) if model.is_classifier else Fraction(0)
    agg = campaign_rho(model, data, cfg, seed).aggregates[0]
    return {
        "seed": seed,
        "depth": depth,
        "n_trees": n_trees,
        "accuracy": float(task_metric),
        "rho": float(agg.rho),
        "ce": float(agg.ce_fraction),
        "timeout": float(agg.timeout_fraction),
        "unknown": float(agg.unknown_fraction),
    }


def run_trend(cfg: TrendConfig) -> list[dict]:
    """One row per (seed, depth, n_trees): training accuracy and campaign fractions."""
    rows = []
    for seed in cfg.seeds:
        data = synth_dataset(cfg.dataset, cfg.n, seed)
        task = data.task
        for depth in cfg.depths:
            biggest = max(cfg.trees)
            full = train(data, TrainConfig(biggest, depth, cfg.learning_rate, task, seed))
            for n_trees in sorted(cfg.trees):
                rows.append(_trend_row(seed, depth, n_trees, truncate(full, n_trees), data, cfg))
    return rows


def matched_accuracy_pair(
    data: Dataset,
    shallow: int,
    deep: int,
    deep_trees: int,
    max_shallow_trees: int,
    learning_rate,
    seed: int,
    tolerance: Fraction = Fraction(2, 100),
) -> Optional[tuple[Model, Model, Fraction, Fraction]]:
    """A shallow and a deep model whose training accuracies differ by at most ``tolerance``.

    Both are boosting prefixes: the deep model uses the longest prefix of up
    to ``deep_trees`` stages that some shallow prefix (up to
    ``max_shallow_trees`` stages) can match; among matching shallow prefixes
    the closest in accuracy, then the shortest, wins. Returns ``None`` when
    nothing matches.
    """
    lr = as_rational(learning_rate)
    deep_full = train(data, TrainConfig(deep_trees, deep, lr, "classification", seed))
    shallow_full = train(data, TrainConfig(max_shallow_trees, shallow, lr, "classification", seed))
    shallow_acc = [(n, accuracy(truncate(shallow_full, n), data)) for n in range(1, max_shallow_trees + 1)]
    for nd in range(deep_trees, 0, -1):
        deep_model = truncate(deep_full, nd)
        deep_acc = accuracy(deep_model, data)
        gap, n, acc = min((abs(a - deep_acc), n, a) for n, a in shallow_acc)
        if gap <= tolerance:
            return truncate(shallow_full, n), deep_model, acc, deep_acc
    return None


def write_trend_csv(rows: Sequence[dict], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TREND_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in TREND_COLUMNS})
    return path


def median_by_depth(rows: Sequence[dict]) -> dict[int, float]:
    groups: dict[int, list[float]] = {}
    for r in rows:
        groups.setdefault(r["depth"], []).append(r["rho"])
    return {d: statistics.median(v) for d, v in sorted(groups.items())}
