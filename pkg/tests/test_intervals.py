import itertools
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from verigb.intervals import Box, Interval, ball
from verigb.model import FeatureKind, FeatureSpec
from verigb.query import Norm, RobustnessQuery, box_reachable, box_witness, distance, in_ball

from gen import int_features

fr = st.fractions(min_value=-10, max_value=10, max_denominator=4)


def test_open_and_closed_emptiness():
    assert not Interval.point(Fraction(3)).is_empty()
    assert Interval(Fraction(3), Fraction(3), True, False).is_empty()
    assert Interval(Fraction(4), Fraction(3)).is_empty()
    assert not Interval().is_empty()


def test_integer_queries():
    iv = Interval(Fraction(5), Fraction(7), True, False)
    assert list(iv.integers()) == [6, 7]
    assert Interval(Fraction(5), Fraction(6), True, True).contains_integer() is False
    assert Interval(Fraction(1, 2), Fraction(3, 2)).integer_count() == 1


def test_distance_attainment():
    assert Interval(Fraction(5), None, True).distance(Fraction(3)) == (2, False)
    assert Interval(Fraction(5), None).distance(Fraction(3)) == (2, True)
    assert Interval(None, Fraction(1)).distance(Fraction(0)) == (0, True)


def test_nearest_integer_tie_goes_low():
    assert Interval(Fraction(0), Fraction(10)).nearest_integer(Fraction(5, 2)) == 2
    assert Interval(Fraction(5), None, True).nearest_integer(Fraction(3)) == 6


def test_box_intersection():
    a = Box()
    a.constrain(0, Interval(upper=Fraction(5)))
    b = Box()
    b.constrain(0, Interval(lower=Fraction(5), lower_strict=True))
    assert a.intersect(b).is_empty()
    assert not a.is_empty()


@settings(max_examples=200, deadline=None)
@given(fr, fr, st.booleans(), st.booleans(), fr)
def test_contains_matches_bounds(lo, hi, ls, us, v):
    iv = Interval(lo, hi, ls, us)
    expected = (v > lo if ls else v >= lo) and (v < hi if us else v <= hi)
    assert iv.contains(v) == expected
    if iv.contains(v):
        assert not iv.is_empty()
        assert iv.distance(v) == (0, True)


@settings(max_examples=200, deadline=None)
@given(fr, fr, st.booleans(), st.booleans(), fr, fr, st.booleans(), st.booleans(), fr)
def test_intersection_is_conjunction(a, b, s1, s2, c, d, s3, s4, v):
    i1, i2 = Interval(a, b, s1, s2), Interval(c, d, s3, s4)
    assert i1.intersect(i2).contains(v) == (i1.contains(v) and i2.contains(v))


@settings(max_examples=200, deadline=None)
@given(fr, fr, st.booleans(), st.booleans())
def test_integer_helpers_agree_with_enumeration(lo, hi, ls, us):
    iv = Interval(lo, hi, ls, us)
    brute = [k for k in range(-12, 13) if iv.contains(Fraction(k))]
    assert list(iv.integers()) == brute
    assert iv.contains_integer() == bool(brute)


@settings(max_examples=200, deadline=None)
@given(fr, fr, st.booleans(), st.booleans(), fr, st.fractions(min_value=0, max_value=3, max_denominator=4))
def test_point_near_stays_inside(lo, hi, ls, us, v, slack):
    iv = Interval(lo, hi, ls, us)
    assume(not iv.is_empty())
    d, attained = iv.distance(v)
    assume(attained or slack > 0)
    p = iv.point_near(v, slack if not attained else Fraction(0))
    assert iv.contains(p)
    assert abs(p - v) <= d + slack


# ---------------------------------------------------------------- boxes against balls


def brute_reachable(box, query, features):
    ranges = [range(int(x) - 3, int(x) + 4) for x in query.x]
    for pt in itertools.product(*ranges):
        xp = tuple(Fraction(v) for v in pt)
        if all(box.get(i).contains(xp[i]) for i in range(len(xp))):
            if distance(query.x, xp, query.norm) <= query.epsilon:
                if not query.clamp_to_domain or all(0 <= v <= 15 for v in xp):
                    return True
    return False


box_bounds = st.tuples(st.integers(-2, 18).map(lambda k: Fraction(k, 2)), st.booleans())


@settings(max_examples=150, deadline=None)
@given(
    x=st.lists(st.integers(0, 15), min_size=2, max_size=2),
    eps=st.integers(0, 2),
    norm=st.sampled_from(["inf", "1"]),
    clamp=st.booleans(),
    bounds=st.lists(st.tuples(box_bounds, box_bounds), min_size=2, max_size=2),
)
def test_integer_reachability_matches_enumeration(x, eps, norm, clamp, bounds):
    feats = int_features(2)
    q = RobustnessQuery.make(x, eps, None, norm, clamp)
    box = Box()
    for i, ((lo, ls), (hi, us)) in enumerate(bounds):
        box.constrain(i, Interval(lo + x[i] - 5, hi + x[i] - 5, ls, us))
    reach = box_reachable(box, q, feats)
    assert reach == brute_reachable(box, q, feats)
    w = box_witness(box, q, feats)
    assert (w is not None) == reach
    if w is not None:
        assert all(box.get(i).contains(w[i]) for i in range(2))
        assert in_ball(_FakeModel(feats), q, w) == []


@settings(max_examples=150, deadline=None)
@given(
    x=st.lists(st.integers(-5, 5).map(Fraction), min_size=3, max_size=3),
    eps=st.integers(0, 4).map(lambda k: Fraction(k, 2)),
    norm=st.sampled_from(["inf", "1"]),
    bounds=st.lists(st.tuples(box_bounds, box_bounds), min_size=3, max_size=3),
)
def test_real_witness_is_admissible(x, eps, norm, bounds):
    feats = tuple(FeatureSpec(i) for i in range(3))
    q = RobustnessQuery.make(x, eps, None, norm)
    box = Box()
    for i, ((lo, ls), (hi, us)) in enumerate(bounds):
        box.constrain(i, Interval(lo - 5, hi - 5, ls, us))
    w = box_witness(box, q, feats)
    if w is None:
        return
    assert all(box.get(i).contains(w[i]) for i in range(3))
    assert distance(q.x, w, q.norm) <= eps


def test_l1_open_end_is_excluded():
    # x0 > 1 from x0 = 0 with epsilon 1 under the 1-norm needs distance > 1
    feats = (FeatureSpec(0),)
    box = Box()
    box.constrain(0, Interval(Fraction(1), None, True))
    assert not box_reachable(box, RobustnessQuery.make([0], 1, None, "1"), feats)
    assert box_reachable(box, RobustnessQuery.make([0], "11/10", None, "1"), feats)


class _FakeModel:
    def __init__(self, features):
        self.features = features


def test_ball_and_distance():
    assert ball(Fraction(3), Fraction(1)) == Interval(Fraction(2), Fraction(4))
    assert distance([Fraction(0), Fraction(0)], [Fraction(1), Fraction(-2)], Norm.L1) == 3
    assert distance([Fraction(0), Fraction(0)], [Fraction(1), Fraction(-2)], Norm.LINF) == 2


def test_norm_aliases_and_bad_query():
    assert Norm.parse("linf") == Norm.LINF
    assert Norm.parse("l1") == Norm.L1
    with pytest.raises(ValueError):
        RobustnessQuery.make([0], -1)
