"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are echoed in the terminal summary under "acceptance criteria".
"""

import itertools
import random
import statistics
import time
from fractions import Fraction

import pytest

from acceptance_log import record
from gen import int_features, pigeonhole_model, random_classifier_model, random_instance, random_tree, real_features, random_regressor_model
from procs import solver_pids, wait_gone
from verigb import formula as F
from verigb.booster import TrainConfig, synth_dataset, train
from verigb.campaign import matched_accuracy_pair, select_inputs
from verigb.encoder import encode_model
from verigb.model import Classifier, Model, Regressor, eval_classifier, eval_regressor
from verigb.oracle import grid_check, tuple_check
from verigb.query import RobustnessQuery
from verigb.robustness import check_local, check_universal, monolithic_formulas
from verigb.solver import SolverConfig, Status, make_script, solve, solve_per_class
from verigb.verdict import VerdictKind, validate_counterexample

pytestmark = pytest.mark.slow

DECIDED = (VerdictKind.ROBUST, VerdictKind.NOT_ROBUST)
N_CLASSIFIERS = 120
N_REGRESSORS = 100


@pytest.fixture(scope="module")
def cfg():
    from conftest import HAVE_Z3

    if not HAVE_Z3:
        pytest.skip("z3 executable not on PATH")
    return SolverConfig(("z3", "-in", "-smt2"), budget=120.0, kill_grace=2.0)


@pytest.fixture(scope="module")
def instances():
    rng = random.Random(20240501)
    out = [random_instance(rng, "classifier") for _ in range(N_CLASSIFIERS)]
    out += [random_instance(rng, "regressor") for _ in range(N_REGRESSORS)]
    return out


@pytest.fixture(scope="module")
def runs(cfg, instances):
    """Every solver and oracle run the first four criteria look at."""
    start = time.monotonic()
    rows = []
    for model, query in instances:
        rows.append(
            {
                "model": model,
                "query": query,
                "solver": check_local(model, query, cfg),
                "grid": grid_check(model, query),
                "tuple": tuple_check(model, query),
            }
        )
    return rows, time.monotonic() - start


def all_counterexamples(verdicts):
    return [v.counterexample for v in verdicts if v.counterexample is not None]


# ---------------------------------------------------------------- 1


def test_criterion_1_oracle_equivalence(runs):
    rows, elapsed = runs
    mismatches = [
        i for i, r in enumerate(rows)
        if r["solver"].kind not in DECIDED or not (r["solver"].kind == r["grid"].kind == r["tuple"].kind)
    ]
    ok = len(rows) >= 200 and not mismatches and elapsed <= 600
    counts = {k.value: sum(r["solver"].kind == k for r in rows) for k in DECIDED}
    record(1, ok, f"{len(rows)} instances, {len(mismatches)} mismatches, verdicts {counts}, {elapsed:.1f}s (limit 600s)")
    assert ok, f"mismatching instances: {mismatches[:10]}"


# ---------------------------------------------------------------- 2


def test_criterion_2_safe_pruning(cfg, runs):
    rows, _ = runs
    status_diffs, size_bad, strictly_smaller, with_pruning = [], [], 0, 0
    for i, r in enumerate(rows):
        model, query = r["model"], r["query"]
        scripts = {}
        for prune in (True, False):
            formulas, stats = monolithic_formulas(model, query, prune=prune)
            scripts[prune] = (make_script(formulas), stats)
        pruned, unpruned = scripts[True][0], scripts[False][0]
        s_p, s_u = solve(pruned, cfg).status, solve(unpruned, cfg).status
        if s_p != s_u or s_p not in (Status.SAT, Status.UNSAT):
            status_diffs.append(i)
        # the per-class split must agree as well
        if model.is_classifier and check_local(model, query, cfg, prune=False).kind != r["solver"].kind:
            status_diffs.append(i)
        n_pruned = scripts[True][1].leaves_pruned
        if len(pruned.text) > len(unpruned.text):
            size_bad.append(i)
        if n_pruned > 0:
            with_pruning += 1
            if len(pruned.text) < len(unpruned.text):
                strictly_smaller += 1
            else:
                size_bad.append(i)
    ok = not status_diffs and not size_bad
    record(
        2, ok,
        f"{len(rows)} instances, {len(status_diffs)} status differences, {with_pruning} with pruned leaves "
        f"({strictly_smaller} strictly smaller dumps), {len(size_bad)} size violations",
    )
    assert ok, (status_diffs[:10], size_bad[:10])


# ---------------------------------------------------------------- 3


def test_criterion_3_per_class_matches_monolithic(cfg, runs):
    rows, _ = runs
    checked, diffs = 0, []
    for i, r in enumerate(rows):
        model, query = r["model"], r["query"]
        if not model.is_classifier:
            continue
        checked += 1
        mono = check_local(model, query, cfg, per_class=False).kind
        a = eval_classifier(model.payload, query.x)[0]
        rivals = [q for q in range(model.payload.n_classes) if q != a]
        kinds = [solve_per_class(model, query, cfg, width=w).kind for w in (1, 4)]
        # width 1 runs siblings strictly in launch order, so every order is a completion order
        kinds += [solve_per_class(model, query, cfg, width=1, order=list(p)).kind for p in itertools.permutations(rivals)]
        if mono not in DECIDED or any(k != mono for k in kinds):
            diffs.append(i)
    ok = checked > 0 and not diffs
    record(3, ok, f"{checked} classifier instances at widths 1 and 4 and every launch order, {len(diffs)} disagreements")
    assert ok, diffs[:10]


# ---------------------------------------------------------------- 4


def test_criterion_4_counterexamples_are_valid(cfg, runs):
    rows, _ = runs
    total, bad = 0, []
    for i, r in enumerate(rows):
        model, query = r["model"], r["query"]
        verdicts = [r["solver"], r["grid"], r["tuple"], check_local(model, query, cfg, prune=False)]
        if model.is_classifier:
            verdicts.append(check_local(model, query, cfg, per_class=False))
        for ce in all_counterexamples(verdicts):
            total += 1
            ok, problems = validate_counterexample(model, query, ce)
            if not ok:
                bad.append((i, problems))
    ok = total > 0 and not bad
    record(4, ok, f"{total} counter-examples re-validated exactly, {len(bad)} invalid")
    assert ok, bad[:5]


# ---------------------------------------------------------------- 5


def test_criterion_5_encoding_fidelity(cfg):
    rng = random.Random(77)
    failures = []
    for n in range(100):
        m = rng.randint(1, 4)
        if n % 2 == 0:
            feats = int_features(m)
            x = [Fraction(rng.randint(0, 15)) for _ in range(m)]
        else:
            feats = real_features(m)
            x = [Fraction(rng.randint(-4, 64), rng.choice([1, 2, 3, 4])) for _ in range(m)]
        if n % 4 < 2:
            model = random_classifier_model(rng, feats, rng.randint(2, 3), 3, 3)
        else:
            model = random_regressor_model(rng, feats, 3, 3)
        enc, _ = encode_model(model)
        pins = [F.eq(F.Var(f"x_{i}", F.INT if s.is_integer else F.REAL), F.const(v)) for i, (s, v) in enumerate(zip(feats, x))]
        native = [eval_regressor(r, x) for r in model.regressors]
        res = solve(make_script([enc] + pins), cfg)
        if res.status != Status.SAT:
            failures.append((n, res.status))
            continue
        got = [res.assignment[f"out_{j}"] for j in range(len(native))]
        if got != native:
            failures.append((n, "out", got, native))
        if model.is_classifier and res.assignment["arg"] != eval_classifier(model.payload, x)[0] + 1:
            failures.append((n, "arg"))
        # and the solution is unique: no other output value is consistent with x'
        others = [F.Not(F.eq(F.Var(f"out_{j}"), F.const(v))) for j, v in enumerate(native)]
        if solve(make_script([enc] + pins + [F.disj(others)]), cfg).status != Status.UNSAT:
            failures.append((n, "not unique"))
    ok = not failures
    record(5, ok, f"100 (model, x') pairs solved with x' fixed, {len(failures)} mismatches")
    assert ok, failures[:5]


# ---------------------------------------------------------------- 6


def test_criterion_6_epsilon_monotonicity(cfg, instances):
    violations = []
    robust = {Fraction(1): 0, Fraction(2): 0}
    for i, (model, query) in enumerate(instances):
        rep = check_universal(model, [query.x], query, [1, 2], cfg)
        kinds = {rec.epsilon: rec.kind for rec in rep.records}
        for e in robust:
            robust[e] += kinds[e] == VerdictKind.ROBUST
        if kinds[Fraction(2)] == VerdictKind.ROBUST and kinds[Fraction(1)] != VerdictKind.ROBUST:
            violations.append(i)
    n = len(instances)
    rho1, rho2 = Fraction(robust[Fraction(1)], n), Fraction(robust[Fraction(2)], n)
    # and one trained-model campaign over many inputs
    data = synth_dataset("blobs", 200, 4)
    model = train(data, TrainConfig(10, 3, "1/5", seed=4))
    idx = select_inputs(data, "random-k", 30, 4)
    rep = check_universal(model, [data.rows[i] for i in idx], RobustnessQuery.make([0] * 4, 1, None, "inf", True), [1, 2], cfg, width=4)
    per_input = {}
    for rec in rep.records:
        per_input.setdefault(rec.input_id, {})[rec.epsilon] = rec.kind
    violations += [f"blobs:{k}" for k, v in per_input.items() if v[Fraction(2)] == VerdictKind.ROBUST and v[Fraction(1)] != VerdictKind.ROBUST]
    agg = {a.epsilon: a.rho for a in rep.aggregates}
    ok = not violations and rho1 >= rho2 and agg[Fraction(1)] >= agg[Fraction(2)]
    record(
        6, ok,
        f"random instances rho {float(rho1):.3f} -> {float(rho2):.3f}, blobs campaign rho {float(agg[Fraction(1)]):.3f} -> "
        f"{float(agg[Fraction(2)]):.3f}, {len(violations)} inputs robust at 2 but not at 1",
    )
    assert ok, violations[:10]


# ---------------------------------------------------------------- 7


TREND = dict(kind="blobs", n=300, n_features=8, learning_rate="3/10", deep_trees=10, max_shallow_trees=40, inputs=20, epsilon=2)


def test_criterion_7_depth_trend(cfg):
    start = time.monotonic()
    rho = {2: [], 5: []}
    gaps = []
    for seed in range(5):
        data = synth_dataset(TREND["kind"], TREND["n"], seed, n_features=TREND["n_features"])
        pair = matched_accuracy_pair(data, 2, 5, TREND["deep_trees"], TREND["max_shallow_trees"], TREND["learning_rate"], seed)
        assert pair is not None, f"seed {seed}: no accuracy-matched pair"
        shallow, deep, acc_s, acc_d = pair
        gaps.append(abs(acc_s - acc_d))
        idx = select_inputs(data, "random-k", TREND["inputs"], seed)
        template = RobustnessQuery.make([0] * TREND["n_features"], TREND["epsilon"], None, "inf", True)
        for depth, model in ((2, shallow), (5, deep)):
            rep = check_universal(model, [data.rows[i] for i in idx], template, None, cfg, width=4)
            agg = rep.aggregates[0]
            assert agg.timeout_fraction == 0 and agg.unknown_fraction == 0
            rho[depth].append(agg.rho)
    elapsed = time.monotonic() - start
    med = {d: statistics.median(v) for d, v in rho.items()}
    ok = max(gaps) <= Fraction(2, 100) and med[2] >= med[5] and elapsed <= 1200
    record(
        7, ok,
        f"5 seeds, max accuracy gap {float(max(gaps)):.3f}, median rho depth 2 = {float(med[2]):.3f}, "
        f"depth 5 = {float(med[5]):.3f}, {elapsed:.1f}s (limit 1200s)",
    )
    assert ok


# ---------------------------------------------------------------- 8


def dense_model():
    rng = random.Random(3)
    feats = int_features(20, 0, 255)
    regs = tuple(Regressor(tuple(random_tree(rng, 20, 10, 0, 255, full=True) for _ in range(50))) for _ in range(2))
    return Model(feats, Classifier(regs))


def test_criterion_8_timeout_discipline():
    from conftest import HAVE_Z3

    if not HAVE_Z3:
        pytest.skip("z3 executable not on PATH")
    grace = 2.0
    cfg = SolverConfig(("z3", "-in", "-smt2"), budget=1.0, kill_grace=grace)
    cases = {
        # the solver gets the instance and has to be killed
        "pigeonhole, 106 trees": (pigeonhole_model(10, pad_trees=50, pad_depth=10), [1] * 11, 10),
        # the budget runs out while encoding 100 full depth-10 trees
        "dense, 100 trees": (dense_model(), [128] * 20, 64),
    }
    lines, ok = [], True
    for name, (model, x, eps) in cases.items():
        assert sum(len(r.trees) for r in model.regressors) >= 100
        assert max(t.depth() for r in model.regressors for t in r.trees) >= 10
        before = solver_pids()
        t0 = time.monotonic()
        v = check_local(model, RobustnessQuery.make(x, eps, None, "inf", True), cfg)
        wall = time.monotonic() - t0
        orphans = wait_gone(before, timeout=0.5)
        good = v.kind == VerdictKind.TIMEOUT and wall <= 1.0 + grace and not orphans
        ok = ok and good
        lines.append(f"{name}: {v.kind.value} in {wall:.2f}s, {len(orphans)} orphans")
    record(8, ok, "; ".join(lines) + f" (limit {1.0 + grace:.0f}s)")
    assert ok


# ---------------------------------------------------------------- 9


def test_criterion_9_scalability(cfg):
    data = synth_dataset("blobs", 600, 9, n_features=20)
    model = train(data, TrainConfig(50, 5, "1/5", seed=9))
    assert all(s.is_integer for s in model.features) and len(model.features) == 20
    assert all(len(r.trees) == 50 and max(t.depth() for t in r.trees) <= 5 for r in model.regressors)
    default = SolverConfig(cfg.command)  # 600 s budget
    lines, ok = [], True
    for eps in (4, 16):
        t0 = time.monotonic()
        v = check_local(model, RobustnessQuery.make(data.rows[0], eps, None, "inf", True), default)
        wall = time.monotonic() - t0
        ok = ok and v.kind in DECIDED and wall <= 600
        lines.append(f"eps {eps}: {v.kind.value} in {wall:.2f}s, {v.prune_stats.leaves_pruned}/{v.prune_stats.leaves_total} leaves pruned")
    record(9, ok, "50 trees x depth 5 x 20 integer features; " + "; ".join(lines))
    assert ok
