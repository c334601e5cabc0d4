import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gen import random_classifier_model, random_regressor_model, random_tree, real_features, toy_classifier
from verigb.model import (
    Classifier,
    DecisionTree,
    FeatureKind,
    FeatureSpec,
    Internal,
    Leaf,
    Model,
    ModelError,
    NodeCondition,
    Regressor,
    eval_classifier,
    eval_regressor,
    eval_tree,
    validate,
)
from verigb.modelio import ModelFormatError, dumps, load_model, loads, save_model


def leaf_model(tree):
    return Model((FeatureSpec(0),), Regressor((tree,)))


def test_single_leaf_is_valid():
    assert validate(leaf_model(DecisionTree.leaf("1/2"))) == []


def test_shared_child_is_one_violation():
    cond = NodeCondition(0, Fraction(1))
    tree = DecisionTree(
        {
            0: Internal(cond, 1, 2),
            1: Internal(cond, 3, 4),
            2: Internal(cond, 3, 5),
            3: Leaf(Fraction(0)),
            4: Leaf(Fraction(0)),
            5: Leaf(Fraction(0)),
        }
    )
    problems = validate(leaf_model(tree))
    assert len(problems) == 1
    assert "node 3 has 2 predecessors" in problems[0]


def test_identical_children_is_one_violation():
    tree = DecisionTree({0: Internal(NodeCondition(0, Fraction(1)), 1, 1), 1: Leaf(Fraction(0))})
    problems = validate(leaf_model(tree))
    assert len(problems) == 1
    assert "identical" in problems[0]


def test_other_violations_are_reported():
    tree = DecisionTree({0: Internal(NodeCondition(3, Fraction(1)), 1, 2), 1: Leaf(Fraction(0)), 2: Leaf(Fraction(0)), 7: Leaf(Fraction(1))})
    problems = validate(leaf_model(tree))
    assert any("undeclared feature 3" in p for p in problems)
    assert any("node 7" in p for p in problems)
    bad_bounds = Model((FeatureSpec(0, FeatureKind.INTEGER, Fraction(1, 2), Fraction(0)),), Regressor((DecisionTree.leaf(0),)))
    problems = validate(bad_bounds)
    assert any("lower bound exceeds" in p for p in problems)
    assert any("non-integer bound" in p for p in problems)


def test_eval_tree_boundary_follows_le():
    tree = DecisionTree.stump(0, 5, 1, 0)
    assert eval_tree(tree, [Fraction(5)]) == (1, 1)
    assert eval_tree(tree, [Fraction("5.0001")]) == (0, 2)


def test_eval_tree_depth_two():
    tree = DecisionTree(
        {
            0: Internal(NodeCondition(0, Fraction(2)), 1, 2),
            1: Internal(NodeCondition(1, Fraction(7)), 3, 4),
            2: Leaf(Fraction(9)),
            3: Leaf(Fraction(10)),
            4: Leaf(Fraction(11)),
        }
    )
    assert eval_tree(tree, [Fraction(1), Fraction(9)]) == (11, 4)


def test_eval_tree_bad_feature_is_structural_error():
    with pytest.raises(ModelError):
        eval_tree(DecisionTree.stump(2, 0, 1, 0), [Fraction(0)])


def test_regressor_sum_and_determinism():
    tree = DecisionTree.stump(0, 5, 1, 0)
    reg = Regressor((tree, tree))
    assert eval_regressor(reg, [Fraction(3)]) == 2
    assert eval_regressor(reg, [Fraction(3)]) == eval_regressor(reg, [Fraction(3)])


def walk(tree, x):
    """Independent descent: follow the recorded branch choices explicitly."""
    node = tree.nodes[tree.root]
    while not isinstance(node, Leaf):
        c = node.condition
        node = tree.nodes[node.pos] if x[c.feature] <= c.threshold else tree.nodes[node.neg]
    return node.weight


def test_regressor_matches_explicit_walk():
    rng = random.Random(7)
    trees = [random_tree(rng, 3, 3, full=True) for _ in range(3)]
    reg = Regressor(tuple(trees), Fraction(1, 3))
    for _ in range(50):
        x = [Fraction(rng.randint(-4, 34), 2) for _ in range(3)]
        expected = Fraction(1, 3)
        for t in trees:
            expected += walk(t, x)
        assert eval_regressor(reg, x) == expected


def const_classifier(*values):
    return Classifier(tuple(Regressor((DecisionTree.leaf(v),)) for v in values))


def test_classifier_argmax_and_ties():
    assert eval_classifier(const_classifier(1, 0), [Fraction(0)])[0] == 0
    assert eval_classifier(const_classifier(2, 2, 1), [Fraction(0)])[0] == 0
    assert eval_classifier(const_classifier(0, 3, 3), [Fraction(0)])[0] == 1


def test_classifier_matches_recomputed_argmax():
    rng = random.Random(11)
    model = random_classifier_model(rng, real_features(3), 3, 3, 3)
    cls = model.payload
    for _ in range(50):
        x = [Fraction(rng.randint(0, 30), 2) for _ in range(3)]
        cls_idx, scores = eval_classifier(cls, x)
        recomputed = [eval_regressor(r, x) for r in cls.regressors]
        best = max(recomputed)
        assert cls_idx == recomputed.index(best)
        assert list(scores) == recomputed


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), shift=st.fractions(-5, 5))
def test_argmax_invariant_under_common_base_shift(seed, shift):
    rng = random.Random(seed)
    model = random_classifier_model(rng, real_features(2), 3, 2, 2)
    shifted = Classifier(
        tuple(Regressor(r.trees, r.base_score + shift) for r in model.payload.regressors),
        model.payload.class_labels,
    )
    for _ in range(10):
        x = [Fraction(rng.randint(0, 30), 2) for _ in range(2)]
        assert eval_classifier(model.payload, x)[0] == eval_classifier(shifted, x)[0]


def relabel(tree: DecisionTree, perm: dict) -> DecisionTree:
    nodes = {}
    for nid, node in tree.nodes.items():
        if isinstance(node, Internal):
            node = Internal(node.condition, perm[node.pos], perm[node.neg])
        nodes[perm[nid]] = node
    return DecisionTree(dict(sorted(nodes.items(), reverse=True)), perm[tree.root])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_node_relabelling_preserves_evaluation(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, 2, 3)
    ids = list(tree.nodes)
    shuffled = ids[:]
    rng.shuffle(shuffled)
    perm = {a: 100 + b for a, b in zip(ids, shuffled)}
    other = relabel(tree, perm)
    assert validate(leaf_model_m(other, 2)) == []
    for _ in range(10):
        x = [Fraction(rng.randint(0, 30), 2) for _ in range(2)]
        assert eval_tree(tree, x)[0] == eval_tree(other, x)[0]


def leaf_model_m(tree, m):
    return Model(real_features(m), Regressor((tree,)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_descent_reaches_exactly_one_leaf(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, 2, 4)
    for _ in range(5):
        x = [Fraction(rng.randint(0, 30), 2) for _ in range(2)]
        _, leaf = eval_tree(tree, x)
        # the leaf's path conditions hold and no other leaf's do
        reached = [
            l for l in tree.leaves()
            if all(c.holds(x) == positive for c, positive in tree.path(l))
        ]
        assert reached == [leaf]


# ---------------------------------------------------------------- file format


def test_round_trip(tmp_path):
    model = toy_classifier()
    path = tmp_path / "toy.json"
    save_model(model, path)
    back = load_model(path)
    assert back == model
    assert back.payload.class_labels == ("low", "high")


def test_round_trip_random_exact(tmp_path):
    rng = random.Random(3)
    model = random_regressor_model(rng, real_features(3), 3, 3)
    assert loads(dumps(model)) == model


def test_missing_neg_child_names_the_node():
    text = dumps(toy_classifier()).replace('"neg": 2', '"negx": 2', 1)
    with pytest.raises(ModelFormatError, match=r"node 0.*missing 'neg'"):
        loads(text)


def test_ratio_threshold_is_exact():
    text = dumps(toy_classifier()).replace('"threshold": "5"', '"threshold": "23/10"')
    model = loads(text)
    assert model.payload.regressors[0].trees[0].nodes[0].condition.threshold == Fraction(23, 10)
    text = dumps(toy_classifier()).replace('"threshold": "5"', '"threshold": "2.3"')
    assert loads(text).payload.regressors[0].trees[0].nodes[0].condition.threshold == Fraction(23, 10)


def test_json_syntax_error_has_line():
    with pytest.raises(ModelFormatError, match="line 2"):
        loads('{\n "kind": ,\n}')


def test_invalid_model_rejected_on_load():
    text = dumps(toy_classifier()).replace('"neg": 2', '"neg": 1', 1)
    with pytest.raises(ModelFormatError, match="invalid model"):
        loads(text)
    assert validate(loads(text, check=False))
