import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gen import int_features, random_instance, toy_classifier, two_stump_regressor
from verigb.model import Classifier, DecisionTree, Model, Regressor
from verigb.oracle import OracleTooLarge, grid_check, leaf_tuples, oracle_check, tuple_check
from verigb.query import RobustnessQuery
from verigb.verdict import VerdictKind, validate_counterexample


def constant_classifier(m):
    regs = (Regressor((DecisionTree.leaf(1),)), Regressor((DecisionTree.leaf(0),)))
    return Model(int_features(m), Classifier(regs))


def test_grid_visits_whole_cube():
    v = grid_check(constant_classifier(3), RobustnessQuery.make([5, 5, 5], 1))
    assert v.kind == VerdictKind.ROBUST
    assert v.solver_stats["evaluations"] == 27


def test_grid_l1_ball_is_smaller():
    v = grid_check(constant_classifier(3), RobustnessQuery.make([5, 5, 5], 1, None, "1"))
    assert v.solver_stats["evaluations"] == 7


def test_grid_respects_clamp():
    v = grid_check(constant_classifier(2), RobustnessQuery.make([0, 15], 1, None, "inf", True))
    assert v.solver_stats["evaluations"] == 4


def test_grid_cap_message():
    with pytest.raises(OracleTooLarge, match="too large for grid oracle"):
        grid_check(constant_classifier(3), RobustnessQuery.make([5, 5, 5], 10), cap=1000)


def test_grid_first_violation_is_lexicographic():
    v = grid_check(toy_classifier(), RobustnessQuery.make([5], 2))
    assert v.kind == VerdictKind.NOT_ROBUST
    assert v.counterexample.x_prime == (Fraction(6),)


def test_grid_needs_integer_features():
    with pytest.raises(ValueError):
        grid_check(two_stump_regressor(), RobustnessQuery.make([3], 1, 1))


def test_tuple_on_real_features():
    model = two_stump_regressor()
    v = tuple_check(model, RobustnessQuery.make([3], 3, 2))
    assert v.kind == VerdictKind.NOT_ROBUST
    assert v.counterexample.x_prime == (Fraction(11, 2),)
    assert tuple_check(model, RobustnessQuery.make([3], 1, 3)).kind == VerdictKind.ROBUST
    # the strict side of x0 <= 5 from x0 = 4: radius 1 only reaches 5
    assert tuple_check(model, RobustnessQuery.make([4], 1, 1)).kind == VerdictKind.ROBUST


def test_tuple_enumeration_prunes_infeasible_pairs():
    model = two_stump_regressor()
    tuples = list(leaf_tuples(model.payload.trees, RobustnessQuery.make([5], 1, 0), model))
    # both stumps test the same threshold, so mixed leaf pairs are empty
    assert sorted(t[0] for t in tuples) == [(1, 1), (2, 2)]


def test_auto_falls_back_to_tuple():
    v = oracle_check(constant_classifier(3), RobustnessQuery.make([5, 5, 5], 100), cap=1000)
    assert v.kind == VerdictKind.ROBUST
    assert v.solver_stats["oracle"] == "tuple"


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 10**6), kind=st.sampled_from(["classifier", "regressor"]))
def test_grid_and_tuple_agree(seed, kind):
    model, query = random_instance(random.Random(seed), kind)
    g = grid_check(model, query)
    t = tuple_check(model, query)
    assert g.kind == t.kind
    for v in (g, t):
        if v.counterexample is not None:
            assert validate_counterexample(model, query, v.counterexample) == (True, [])
