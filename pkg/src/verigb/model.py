"""Tree-ensemble models and their native (solver-free) evaluation.

A :class:`DecisionTree` maps node ids to :class:`Internal` or :class:`Leaf`
records. An internal node sends ``x`` to ``pos`` when ``x[feature] <= threshold``
and to ``neg`` otherwise. A :class:`Regressor` sums its trees plus a base score;
a :class:`Classifier` picks the regressor with the largest value, breaking ties
toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

from .numbers import as_rational, is_integral


class ModelError(ValueError):
    """Structural problem met while evaluating a model."""


class FeatureKind(str, Enum):
    REAL = "real"
    INTEGER = "integer"


@dataclass(frozen=True)
class FeatureSpec:
    index: int
    kind: FeatureKind = FeatureKind.REAL
    lower: Optional[Fraction] = None
    upper: Optional[Fraction] = None
    name: str = ""

    @property
    def is_integer(self) -> bool:
        return self.kind == FeatureKind.INTEGER

    @property
    def label(self) -> str:
        return self.name or f"x{self.index}"


@dataclass(frozen=True)
class NodeCondition:
    feature: int
    threshold: Fraction

    def holds(self, x: Sequence[Fraction]) -> bool:
        return x[self.feature] <= self.threshold


@dataclass(frozen=True)
class Internal:
    condition: NodeCondition
    pos: int
    neg: int


@dataclass(frozen=True)
class Leaf:
    weight: Fraction


Node = Union[Internal, Leaf]


@dataclass(frozen=True)
class DecisionTree:
    nodes: dict[int, Node]
    root: int = 0

    @classmethod
    def leaf(cls, weight) -> "DecisionTree":
        return cls({0: Leaf(as_rational(weight))}, 0)

    @classmethod
    def stump(cls, feature: int, threshold, pos_weight, neg_weight) -> "DecisionTree":
        return cls(
            {
                0: Internal(NodeCondition(feature, as_rational(threshold)), 1, 2),
                1: Leaf(as_rational(pos_weight)),
                2: Leaf(as_rational(neg_weight)),
            },
            0,
        )

    def leaves(self) -> list[int]:
        return [nid for nid, node in self.nodes.items() if isinstance(node, Leaf)]

    def parents(self) -> dict[int, tuple[int, bool]]:
        """Map child id -> (parent id, is_pos_child). Assumes a well-formed tree."""
        out: dict[int, tuple[int, bool]] = {}
        for nid, node in self.nodes.items():
            if isinstance(node, Internal):
                out[node.pos] = (nid, True)
                out[node.neg] = (nid, False)
        return out

    def path(self, leaf: int) -> list[tuple[NodeCondition, bool]]:
        """Conditions from the root down to ``leaf``, each with the branch taken."""
        parents = self.parents()
        steps = []
        node = leaf
        while node != self.root:
            if node not in parents:
                raise ModelError(f"node {node} is not reachable from the root")
            parent, positive = parents[node]
            steps.append((self.nodes[parent].condition, positive))
            node = parent
            if len(steps) > len(self.nodes):
                raise ModelError("cycle detected while walking to the root")
        steps.reverse()
        return steps

    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            nid, d = stack.pop()
            node = self.nodes[nid]
            if isinstance(node, Internal):
                stack.append((node.pos, d + 1))
                stack.append((node.neg, d + 1))
            else:
                best = max(best, d)
        return best

    def features_used(self) -> set[int]:
        return {n.condition.feature for n in self.nodes.values() if isinstance(n, Internal)}


@dataclass(frozen=True)
class Regressor:
    trees: tuple[DecisionTree, ...]
    base_score: Fraction = Fraction(0)


@dataclass(frozen=True)
class Classifier:
    regressors: tuple[Regressor, ...]
    class_labels: tuple[str, ...] = ()

    @property
    def n_classes(self) -> int:
        return len(self.regressors)

    def label(self, j: int) -> str:
        return self.class_labels[j] if j < len(self.class_labels) else str(j)


@dataclass(frozen=True)
class Model:
    features: tuple[FeatureSpec, ...]
    payload: Union[Regressor, Classifier]
    metadata: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def is_classifier(self) -> bool:
        return isinstance(self.payload, Classifier)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def regressors(self) -> tuple[Regressor, ...]:
        if isinstance(self.payload, Classifier):
            return self.payload.regressors
        return (self.payload,)


def validate_tree(tree: DecisionTree, n_features: Optional[int] = None, where: str = "tree") -> list[str]:
    problems = []
    if tree.root not in tree.nodes:
        return [f"{where}: root {tree.root} is not a node"]
    preds: dict[int, list[int]] = {nid: [] for nid in tree.nodes}
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            continue
        if node.pos == node.neg:
            problems.append(f"{where}: node {nid} has identical pos and neg child {node.pos}")
        for child in dict.fromkeys((node.pos, node.neg)):
            if child not in tree.nodes:
                problems.append(f"{where}: node {nid} points to missing node {child}")
            else:
                preds[child].append(nid)
        feat = node.condition.feature
        if feat < 0 or (n_features is not None and feat >= n_features):
            problems.append(f"{where}: node {nid} tests undeclared feature {feat}")
    for nid in sorted(preds):
        count = len(preds[nid])
        if nid == tree.root and count:
            problems.append(f"{where}: root {nid} has a predecessor")
        elif nid != tree.root and count != 1:
            problems.append(f"{where}: node {nid} has {count} predecessors")
    seen = set()
    stack = [tree.root]
    while stack:
        nid = stack.pop()
        if nid in seen or nid not in tree.nodes:
            continue
        seen.add(nid)
        node = tree.nodes[nid]
        if isinstance(node, Internal):
            stack.extend((node.pos, node.neg))
    for nid in sorted(set(tree.nodes) - seen):
        problems.append(f"{where}: node {nid} is unreachable from the root")
    return problems


def validate(model: Model) -> list[str]:
    """All well-formedness violations of ``model``; empty when valid."""
    problems = []
    m = len(model.features)
    for pos, spec in enumerate(model.features):
        if spec.index != pos:
            problems.append(f"feature {pos}: index {spec.index} does not match position")
        if spec.lower is not None and spec.upper is not None and spec.lower > spec.upper:
            problems.append(f"feature {pos}: lower bound exceeds upper bound")
        if spec.is_integer:
            for bound in (spec.lower, spec.upper):
                if bound is not None and not is_integral(bound):
                    problems.append(f"feature {pos}: integer feature has non-integer bound {bound}")
    if isinstance(model.payload, Classifier):
        if model.payload.n_classes < 2:
            problems.append("classifier needs at least 2 classes")
        labels = model.payload.class_labels
        if labels and len(labels) != model.payload.n_classes:
            problems.append("class_labels length does not match number of regressors")
    for j, reg in enumerate(model.regressors):
        if not reg.trees:
            problems.append(f"regressor {j}: needs at least one tree")
        for i, tree in enumerate(reg.trees):
            problems.extend(validate_tree(tree, m, where=f"regressor {j} tree {i}"))
    return problems


def eval_tree(tree: DecisionTree, x: Sequence[Fraction]) -> tuple[Fraction, int]:
    """Weight of the leaf reached by ``x`` and that leaf's id."""
    nid = tree.root
    for _ in range(len(tree.nodes) + 1):
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            return node.weight, nid
        feat = node.condition.feature
        if not 0 <= feat < len(x):
            raise ModelError(f"node {nid} tests feature {feat} but input has {len(x)} features")
        nid = node.pos if x[feat] <= node.condition.threshold else node.neg
    raise ModelError("descent did not reach a leaf (cycle?)")


def eval_regressor(reg: Regressor, x: Sequence[Fraction]) -> Fraction:
    return reg.base_score + sum((eval_tree(t, x)[0] for t in reg.trees), Fraction(0))


def argmax_lowest(scores: Sequence[Fraction]) -> int:
    best = 0
    for j in range(1, len(scores)):
        if scores[j] > scores[best]:
            best = j
    return best


def eval_classifier(cls: Classifier, x: Sequence[Fraction]) -> tuple[int, tuple[Fraction, ...]]:
    scores = tuple(eval_regressor(r, x) for r in cls.regressors)
    return argmax_lowest(scores), scores


def predict(model: Model, x: Sequence[Fraction]):
    """Regressor value or class index, depending on the model kind."""
    if isinstance(model.payload, Classifier):
        return eval_classifier(model.payload, x)[0]
    return eval_regressor(model.payload, x)
