"""Solver-free exact robustness deciders for small instances.

``grid_check`` enumerates every admissible integer perturbation.
``tuple_check_*`` enumerate combinations of leaves (one per tree), keep the
ones whose joint box meets the perturbation ball, and read the ensemble
output off the leaf weights. Both are ground truth for the solver path.
"""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .encoder import leaf_paths, path_box
from .intervals import Box
from .model import Classifier, DecisionTree, Model, Regressor, eval_classifier, eval_regressor
from .query import Norm, RobustnessQuery, box_reachable, box_witness, check_query, coordinate_range
from .verdict import Verdict, VerdictKind, make_counterexample

GRID_CAP = 10**6
TUPLE_CAP = 10**5


class OracleTooLarge(ValueError):
    pass


def _violates(model: Model, query: RobustnessQuery, reference, x_prime) -> bool:
    if isinstance(model.payload, Classifier):
        return eval_classifier(model.payload, x_prime)[0] != reference
    return abs(eval_regressor(model.payload, x_prime) - reference) >= query.delta


def _reference(model: Model, x):
    if isinstance(model.payload, Classifier):
        return eval_classifier(model.payload, x)[0]
    return eval_regressor(model.payload, x)


def grid_check(model: Model, query: RobustnessQuery, cap: int = GRID_CAP) -> Verdict:
    """Enumerate the integer ball in lexicographic order; first violation wins."""
    check_query(model, query)
    if not all(f.is_integer for f in model.features):
        raise ValueError("grid oracle needs every feature to be integer")
    start = time.monotonic()
    axes = []
    for spec in model.features:
        axes.append([Fraction(v) for v in coordinate_range(spec, query).integers()])
    total = math.prod(len(a) for a in axes)
    if total > cap:
        raise OracleTooLarge(f"instance too large for grid oracle ({total} points > cap {cap})")
    reference = _reference(model, query.x)
    evaluations = 0
    for point in itertools.product(*axes):
        if query.norm == Norm.L1 and sum((abs(p - x) for p, x in zip(point, query.x)), Fraction(0)) > query.epsilon:
            continue
        evaluations += 1
        if _violates(model, query, reference, point):
            return Verdict(
                VerdictKind.NOT_ROBUST,
                make_counterexample(model, query, point),
                time.monotonic() - start,
                solver_stats={"oracle": "grid", "evaluations": evaluations},
            )
    return Verdict(VerdictKind.ROBUST, None, time.monotonic() - start, solver_stats={"oracle": "grid", "evaluations": evaluations})


def _leaf_table(tree: DecisionTree) -> list[tuple[int, Fraction, Box]]:
    return [(leaf, tree.nodes[leaf].weight, path_box(path)) for leaf, path in leaf_paths(tree)]


def leaf_tuples(
    trees: Sequence[DecisionTree],
    query: RobustnessQuery,
    model: Model,
) -> Iterator[tuple[tuple[int, ...], tuple[Fraction, ...], Box]]:
    """Ball-feasible leaf combinations: (leaf ids, leaf weights, joint box).

    Depth-first over trees; a partial combination whose box already misses
    the ball is abandoned, which never loses a feasible completion.
    """
    tables = [_leaf_table(t) for t in trees]

    def walk(k: int, leaves, weights, box: Box):
        if k == len(tables):
            yield tuple(leaves), tuple(weights), box
            return
        for leaf, w, lbox in tables[k]:
            joint = box.intersect(lbox)
            if joint.is_empty() or not box_reachable(joint, query, model.features):
                continue
            yield from walk(k + 1, leaves + [leaf], weights + [w], joint)

    yield from walk(0, [], [], Box())


def _tuple_count(trees: Sequence[DecisionTree]) -> int:
    return math.prod(len(t.leaves()) for t in trees)


def tuple_check_regressor(model: Model, query: RobustnessQuery, cap: int = TUPLE_CAP) -> Verdict:
    check_query(model, query)
    reg = model.payload
    if not isinstance(reg, Regressor):
        raise ValueError("tuple_check_regressor needs a regressor model")
    count = _tuple_count(reg.trees)
    if count > cap:
        raise OracleTooLarge(f"instance too large for tuple oracle ({count} leaf tuples > cap {cap})")
    start = time.monotonic()
    reference = eval_regressor(reg, query.x)
    seen = 0
    for _, weights, box in leaf_tuples(reg.trees, query, model):
        seen += 1
        value = reg.base_score + sum(weights, Fraction(0))
        if abs(reference - value) >= query.delta:
            witness = box_witness(box, query, model.features)
            return Verdict(
                VerdictKind.NOT_ROBUST,
                make_counterexample(model, query, witness),
                time.monotonic() - start,
                solver_stats={"oracle": "tuple", "tuples": seen},
            )
    return Verdict(VerdictKind.ROBUST, None, time.monotonic() - start, solver_stats={"oracle": "tuple", "tuples": seen})


def tuple_check_classifier(model: Model, query: RobustnessQuery, cap: int = TUPLE_CAP) -> Verdict:
    """Per rival class q, look for a feasible joint tuple where q overtakes the original class."""
    check_query(model, query)
    cls = model.payload
    if not isinstance(cls, Classifier):
        raise ValueError("tuple_check_classifier needs a classifier model")
    start = time.monotonic()
    a = eval_classifier(cls, query.x)[0]
    rivals = [q for q in range(cls.n_classes) if q != a]
    for q in rivals:
        trees = cls.regressors[q].trees + cls.regressors[a].trees
        count = _tuple_count(trees)
        if count > cap:
            raise OracleTooLarge(f"instance too large for tuple oracle (class pair {q},{a}: {count} > cap {cap})")
    seen = 0
    for q in rivals:
        rq, ra = cls.regressors[q], cls.regressors[a]
        nq = len(rq.trees)
        for _, weights, box in leaf_tuples(rq.trees + ra.trees, query, model):
            seen += 1
            out_q = rq.base_score + sum(weights[:nq], Fraction(0))
            out_a = ra.base_score + sum(weights[nq:], Fraction(0))
            if out_q > out_a or (out_q == out_a and q < a):
                witness = box_witness(box, query, model.features)
                return Verdict(
                    VerdictKind.NOT_ROBUST,
                    make_counterexample(model, query, witness),
                    time.monotonic() - start,
                    solver_stats={"oracle": "tuple", "tuples": seen, "rival": q},
                )
    return Verdict(VerdictKind.ROBUST, None, time.monotonic() - start, solver_stats={"oracle": "tuple", "tuples": seen})


def tuple_check(model: Model, query: RobustnessQuery, cap: int = TUPLE_CAP) -> Verdict:
    if isinstance(model.payload, Classifier):
        return tuple_check_classifier(model, query, cap)
    return tuple_check_regressor(model, query, cap)


def oracle_check(model: Model, query: RobustnessQuery, method: str = "auto", cap: Optional[int] = None) -> Verdict:
    """Dispatch to ``grid`` or ``tuple``; ``auto`` prefers the grid when it applies."""
    if method == "grid":
        return grid_check(model, query, cap or GRID_CAP)
    if method == "tuple":
        return tuple_check(model, query, cap or TUPLE_CAP)
    if method != "auto":
        raise ValueError(f"unknown oracle method {method!r}")
    if all(f.is_integer for f in model.features):
        try:
            return grid_check(model, query, cap or GRID_CAP)
        except OracleTooLarge:
            pass
    return tuple_check(model, query, cap or TUPLE_CAP)
