"""Local and universal robustness checks built on the encoder and solver driver.

A local query asks whether some admissible ``x'`` near ``x`` changes the class
(classifiers) or moves the output by at least ``delta`` (regressors). The
model outputs at ``x`` are computed natively and enter the formula as
constants.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import formula as F
from .encoder import ARG, BudgetExceeded, encode_model, out_var
from .model import Classifier, Model, eval_classifier, eval_regressor
from .numbers import format_rational
from .query import Norm, RobustnessQuery, check_query
from .report import CampaignReport, InputRecord
from .solver import (
    SolverConfig,
    Status,
    ball_constraints,
    make_script,
    solve,
    solve_per_class,
    verdict_from_sat,
)
from .verdict import CounterExample, Verdict, VerdictKind, make_counterexample, validate_counterexample

__all__ = [
    "CounterExample",
    "Norm",
    "RobustnessQuery",
    "Verdict",
    "VerdictKind",
    "build_phi",
    "check_local",
    "check_universal",
    "make_counterexample",
    "property_violation",
    "validate_counterexample",
]


def property_violation(model: Model, query: RobustnessQuery) -> object:
    """The output part of the negated property, with the output at ``x`` baked in."""
    if isinstance(model.payload, Classifier):
        a = eval_classifier(model.payload, query.x)[0]
        return F.Not(F.eq(ARG, F.Const(Fraction(a + 1))))
    if query.delta is None:
        raise ValueError("a regressor query needs delta")
    base = eval_regressor(model.payload, query.x)
    return F.ge(F.Abs(F.sub(F.Const(base), out_var(0))), F.Const(query.delta))


def build_phi(model: Model, query: RobustnessQuery) -> object:
    check_query(model, query)
    return F.conj([ball_constraints(model, query), property_violation(model, query)])


def monolithic_formulas(model: Model, query: RobustnessQuery, prune: bool = True, deadline=None):
    enc, stats = encode_model(model, query, prune=prune, deadline=deadline)
    return [enc, ball_constraints(model, query), property_violation(model, query)], stats


def check_local(
    model: Model,
    query: RobustnessQuery,
    cfg: Optional[SolverConfig] = None,
    width: Optional[int] = None,
    prune: bool = True,
    per_class: bool = True,
) -> Verdict:
    """Decide local robustness of ``model`` at ``query.x``.

    Classifiers go through the per-class split unless ``per_class`` is off.
    Solver failures come back as UNKNOWN, never as ROBUST.
    """
    check_query(model, query)
    cfg = cfg or SolverConfig()
    if isinstance(model.payload, Classifier) and per_class:
        return solve_per_class(model, query, cfg, width=width, prune=prune)
    start = time.monotonic()
    try:
        formulas, stats = monolithic_formulas(model, query, prune, deadline=start + cfg.budget)
    except BudgetExceeded:
        return Verdict(VerdictKind.TIMEOUT, elapsed=time.monotonic() - start, reason="budget spent while encoding")
    if F.FALSE in formulas:
        return Verdict(VerdictKind.ROBUST, elapsed=time.monotonic() - start, prune_stats=stats, reason="every leaf of some tree pruned")
    remaining = cfg.budget - (time.monotonic() - start)
    if remaining <= 0:
        return Verdict(VerdictKind.TIMEOUT, elapsed=time.monotonic() - start, prune_stats=stats)
    res = solve(make_script(formulas), cfg, budget=remaining)
    elapsed = time.monotonic() - start
    solver_stats = dict(res.stats, status=res.status.value, solver_elapsed=res.elapsed)
    if res.status == Status.UNSAT:
        return Verdict(VerdictKind.ROBUST, None, elapsed, stats, solver_stats)
    if res.status == Status.SAT:
        v = verdict_from_sat(model, query, res.assignment)
        v.elapsed, v.prune_stats, v.solver_stats = elapsed, stats, solver_stats
        return v
    if res.status == Status.TIMEOUT:
        return Verdict(VerdictKind.TIMEOUT, None, elapsed, stats, solver_stats, f"budget {cfg.budget}s")
    return Verdict(VerdictKind.UNKNOWN, None, elapsed, stats, solver_stats, res.output.strip()[:2000])


def check_universal(
    model: Model,
    inputs: Sequence,
    template: RobustnessQuery,
    epsilons: Optional[Sequence] = None,
    cfg: Optional[SolverConfig] = None,
    width: int = 1,
    class_width: Optional[int] = None,
    prune: bool = True,
    ids: Optional[Sequence[str]] = None,
    ce_dir=None,
    checker=None,
) -> CampaignReport:
    """Run ``check_local`` for every input and every epsilon.

    ``template`` supplies delta, norm and clamping; its ``x`` is ignored.
    Inputs are checked concurrently up to ``width``. A failure on one input
    is recorded as UNKNOWN and the campaign goes on. ``checker`` replaces
    ``check_local`` (same signature minus solver options), e.g. an oracle.
    """
    if not inputs:
        raise ValueError("no inputs to check")
    eps_list = [template.epsilon] if epsilons is None else [Fraction(e) for e in epsilons]
    ids = [str(i) for i in range(len(inputs))] if ids is None else [str(i) for i in ids]
    jobs = [(iid, x, eps) for eps in eps_list for iid, x in zip(ids, inputs)]

    def one(job) -> InputRecord:
        iid, x, eps = job
        start = time.monotonic()
        try:
            q = template.with_x(x).with_epsilon(eps)
            if checker is not None:
                v = checker(model, q)
            else:
                v = check_local(model, q, cfg, width=class_width, prune=prune)
        except Exception as exc:  # one bad input must not sink the campaign
            return InputRecord(iid, eps, VerdictKind.UNKNOWN, time.monotonic() - start, reason=f"{type(exc).__name__}: {exc}")
        rec = InputRecord(iid, eps, v.kind, v.elapsed or time.monotonic() - start, reason=v.reason)
        if v.prune_stats is not None:
            rec.leaves_pruned = v.prune_stats.leaves_pruned
            rec.leaves_total = v.prune_stats.leaves_total
        if v.counterexample is not None:
            rec.counterexample = v.counterexample.to_json(model)
            if ce_dir is not None:
                path = Path(ce_dir) / f"ce_{iid}_eps{format_rational(eps).replace('/', '_')}.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(rec.counterexample, indent=1) + "\n")
                rec.ce_path = str(path)
        return rec

    if width <= 1:
        records = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            records = list(pool.map(one, jobs))
    return CampaignReport(records)
