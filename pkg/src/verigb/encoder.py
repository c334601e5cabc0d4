"""Compile tree ensembles into linear-arithmetic formulas.

Variable naming (fixed, relied on by the solver driver and the tests):

* ``x_{i}``      perturbed input feature ``i`` (Int for integer features)
* ``wl_{j}_{i}`` valuation of tree ``i`` of regressor ``j``
* ``out_{j}``    valuation of regressor ``j`` (``j = 0`` for a plain regressor)
* ``arg``        classifier output, ``1 + class index`` (so ``1 <= arg <= c``)

Leaf clauses that cannot be reached from the query's perturbation ball are
dropped during compilation; the reachability test is exact interval
arithmetic on the leaf's path box, never a solver call.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from . import formula as F
from .intervals import Box, Interval
from .model import Classifier, DecisionTree, FeatureKind, FeatureSpec, Internal, Leaf, Model, ModelError, NodeCondition, Regressor
from .query import RobustnessQuery, box_reachable


class BudgetExceeded(Exception):
    """Encoding ran past its deadline."""


def x_var(spec: FeatureSpec) -> F.Var:
    return F.Var(f"x_{spec.index}", F.INT if spec.kind == FeatureKind.INTEGER else F.REAL)


def wl_var(j: int, i: int) -> F.Var:
    return F.Var(f"wl_{j}_{i}")


def out_var(j: int) -> F.Var:
    return F.Var(f"out_{j}")


ARG = F.Var("arg", F.INT)


@dataclass(frozen=True)
class LeafClause:
    leaf: int
    formula: object
    pruned: bool = False


@dataclass
class PruneStats:
    leaves_total: int = 0
    leaves_pruned: int = 0
    per_tree: list = field(default_factory=list)  # (regressor, tree, total, pruned)

    def record(self, j: int, i: int, total: int, pruned: int) -> None:
        self.leaves_total += total
        self.leaves_pruned += pruned
        self.per_tree.append((j, i, total, pruned))

    def merge(self, other: "PruneStats") -> "PruneStats":
        out = PruneStats(self.leaves_total, self.leaves_pruned, list(self.per_tree))
        for rec in other.per_tree:
            out.record(*rec)
        return out

    def as_dict(self) -> dict:
        return {"leaves_total": self.leaves_total, "leaves_pruned": self.leaves_pruned}


def _literal(cond: NodeCondition, positive: bool, features: Sequence[FeatureSpec]):
    if cond.feature >= len(features):
        raise ModelError(f"condition on undeclared feature {cond.feature}")
    atom = F.le(x_var(features[cond.feature]), F.Const(cond.threshold))
    return atom if positive else F.Not(atom)


def path_box(path: Sequence[tuple[NodeCondition, bool]]) -> Box:
    box = Box()
    for cond, positive in path:
        if positive:
            box.constrain(cond.feature, Interval(upper=cond.threshold))
        else:
            box.constrain(cond.feature, Interval(lower=cond.threshold, lower_strict=True))
    return box


def leaf_paths(tree: DecisionTree) -> Iterator[tuple[int, list[tuple[NodeCondition, bool]]]]:
    """Every leaf with its root-to-leaf path, positive branches first."""
    stack = [(tree.root, [])]
    while stack:
        nid, path = stack.pop()
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            yield nid, path
            continue
        if len(path) > len(tree.nodes):
            raise ModelError("cycle in tree")
        stack.append((node.neg, path + [(node.condition, False)]))
        stack.append((node.pos, path + [(node.condition, True)]))


def _clause(path, weight: Fraction, wl: F.Var, features) -> object:
    lits = [_literal(cond, pos, features) for cond, pos in path]
    return F.conj(lits + [F.eq(wl, F.Const(weight))])


def encode_leaf(
    tree: DecisionTree,
    leaf: int,
    tree_index: int,
    features: Sequence[FeatureSpec],
    regressor_index: int = 0,
) -> LeafClause:
    node = tree.nodes.get(leaf)
    if not isinstance(node, Leaf):
        raise ModelError(f"node {leaf} is not a leaf")
    return LeafClause(leaf, _clause(tree.path(leaf), node.weight, wl_var(regressor_index, tree_index), features))


def prune_leaf(
    clause: LeafClause,
    box: Box,
    query: RobustnessQuery,
    features: Sequence[FeatureSpec],
) -> LeafClause:
    """Replace the clause by FALSE when no admissible perturbation reaches its box.

    Only the features constrained by the path are inspected; the others can
    stay at their input value. The test is exact for both norms: per-feature
    emptiness for the infinity norm, summed per-feature distances for the 1-norm.
    """
    if clause.pruned:
        return clause
    if box_reachable(box, query, features, only=box.features()):
        return clause
    return LeafClause(clause.leaf, F.FALSE, True)


def encode_tree(
    tree: DecisionTree,
    tree_index: int,
    features: Sequence[FeatureSpec],
    regressor_index: int = 0,
    query: Optional[RobustnessQuery] = None,
    stats: Optional[PruneStats] = None,
) -> object:
    """Disjunction of the (surviving) leaf clauses."""
    wl = wl_var(regressor_index, tree_index)
    clauses = []
    total = pruned = 0
    for leaf, path in leaf_paths(tree):
        total += 1
        clause = LeafClause(leaf, _clause(path, tree.nodes[leaf].weight, wl, features))
        if query is not None:
            clause = prune_leaf(clause, path_box(path), query, features)
        if clause.pruned:
            pruned += 1
        else:
            clauses.append(clause.formula)
    if stats is not None:
        stats.record(regressor_index, tree_index, total, pruned)
    return F.disj(clauses)


def regressor_sum(reg: Regressor, j: int) -> object:
    terms = [wl_var(j, i) for i in range(len(reg.trees))]
    if reg.base_score != 0 or not terms:
        terms = [F.Const(reg.base_score)] + terms
    return F.eq(out_var(j), F.add(*terms))


def encode_regressor(
    reg: Regressor,
    regressor_index: int,
    features: Sequence[FeatureSpec],
    query: Optional[RobustnessQuery] = None,
    stats: Optional[PruneStats] = None,
    deadline: Optional[float] = None,
) -> object:
    parts = []
    for i, tree in enumerate(reg.trees):
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded("encoding exceeded the budget")
        parts.append(encode_tree(tree, i, features, regressor_index, query, stats))
    parts.append(regressor_sum(reg, regressor_index))
    return F.conj(parts)


def argmax_constraint(n_classes: int) -> object:
    """``arg`` is 1 + the lowest index among the maximal ``out_j``."""
    parts = [F.ge(ARG, F.Const(Fraction(1))), F.le(ARG, F.Const(Fraction(n_classes)))]
    for j in range(n_classes):
        wins = [
            (F.gt if k < j else F.ge)(out_var(j), out_var(k))
            for k in range(n_classes)
            if k != j
        ]
        parts.append(F.Iff(F.eq(ARG, F.Const(Fraction(j + 1))), F.conj(wins)))
    return F.And(tuple(parts))


def encode_classifier(
    cls: Classifier,
    features: Sequence[FeatureSpec],
    query: Optional[RobustnessQuery] = None,
    stats: Optional[PruneStats] = None,
    deadline: Optional[float] = None,
) -> object:
    parts = [encode_regressor(r, j, features, query, stats, deadline) for j, r in enumerate(cls.regressors)]
    parts.append(argmax_constraint(cls.n_classes))
    return F.conj(parts)


def encode_model(
    model: Model,
    query: Optional[RobustnessQuery] = None,
    prune: bool = True,
    deadline: Optional[float] = None,
) -> tuple[object, PruneStats]:
    """Encoding of the whole model, pruned against ``query`` when ``prune`` is set.

    If any tree loses all its leaves the result is FALSE.
    """
    stats = PruneStats()
    q = query if prune else None
    if isinstance(model.payload, Classifier):
        f = encode_classifier(model.payload, model.features, q, stats, deadline)
    else:
        f = encode_regressor(model.payload, 0, model.features, q, stats, deadline)
    return f, stats


def encode_regressors(
    model: Model,
    indices: Sequence[int],
    query: Optional[RobustnessQuery] = None,
    prune: bool = True,
    deadline: Optional[float] = None,
) -> tuple[dict[int, object], PruneStats]:
    """Separate encodings of selected regressors (used by the per-class split)."""
    stats = PruneStats()
    q = query if prune else None
    out = {}
    for j in indices:
        out[j] = encode_regressor(model.regressors[j], j, model.features, q, stats, deadline)
    return out, stats
