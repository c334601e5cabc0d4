"""External SMT solver processes: one-shot scripts, budgets, per-class fan-out.

The solver is any executable that reads an SMT-LIB2 script and answers
``sat``/``unsat`` followed by a ``get-model`` response. The default is
``z3 -in -smt2``; ``VERIGB_SOLVER`` overrides it (split with shell rules).
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import shlex
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import formula as F
from .encoder import ARG, BudgetExceeded, encode_regressors, out_var, x_var
from .model import Classifier, Model, eval_classifier
from .query import RobustnessQuery, check_query
from .verdict import Verdict, VerdictKind, make_counterexample, validate_counterexample

log = logging.getLogger(__name__)

DEFAULT_COMMAND = ("z3", "-in", "-smt2")


def default_command() -> tuple[str, ...]:
    env = os.environ.get("VERIGB_SOLVER")
    return tuple(shlex.split(env)) if env else DEFAULT_COMMAND


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...] = field(default_factory=default_command)
    budget: float = 600.0
    kill_grace: float = 2.0
    workdir: Optional[str] = None
    use_stdin: bool = True

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.kill_grace <= 0:
            raise ValueError("kill_grace must be positive")
        if isinstance(self.command, str):
            object.__setattr__(self, "command", tuple(shlex.split(self.command)))

    def with_budget(self, budget: float) -> "SolverConfig":
        return SolverConfig(self.command, budget, self.kill_grace, self.workdir, self.use_stdin)


class Status(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"
    ERROR = "error"
    CANCELLED = "cancelled"


@dataclass(frozen=True)
class Script:
    formulas: tuple
    variables: tuple
    text: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]


def make_script(formulas: Sequence, variables: Sequence[F.Var] = ()) -> Script:
    """Bundle formulas with declarations for all their free variables."""
    decl = dict(F.free_vars(list(formulas)))
    for v in variables:
        decl.setdefault(v.name, v)
    formulas = tuple(formulas)
    variables = tuple(decl.values())
    return Script(formulas, variables, F.print_smtlib(formulas, variables))


@dataclass
class SolveResult:
    status: Status
    assignment: Optional[dict] = None
    elapsed: float = 0.0
    output: str = ""
    stats: dict = field(default_factory=dict)


class CancelToken:
    """Shared between sibling solves; ``cancel()`` hard-kills every live child."""

    def __init__(self):
        self._lock = threading.Lock()
        self._procs: set = set()
        self.cancelled = False

    def register(self, proc) -> bool:
        with self._lock:
            if self.cancelled:
                return False
            self._procs.add(proc)
            return True

    def unregister(self, proc) -> None:
        with self._lock:
            self._procs.discard(proc)

    def cancel(self) -> None:
        with self._lock:
            self.cancelled = True
            procs = list(self._procs)
        for p in procs:
            _signal_group(p, signal.SIGKILL)


def _signal_group(proc, sig) -> None:
    try:
        os.killpg(proc.pid, sig)
    except (ProcessLookupError, PermissionError):
        pass


def _stop(proc, grace: float) -> None:
    _signal_group(proc, signal.SIGTERM)
    try:
        proc.wait(timeout=grace)
    except subprocess.TimeoutExpired:
        _signal_group(proc, signal.SIGKILL)
        proc.wait()
    try:
        proc.communicate(timeout=grace)
    except (subprocess.TimeoutExpired, ValueError, OSError):
        pass


def dump_artifacts(script: Script, directory, name: Optional[str] = None) -> Path:
    """Write the exact script text sent to the solver; filename from its hash."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{name or script.digest}.smt2"
    target.write_text(script.text)
    return target


def _interpret(script: Script, out: str, err: str, returncode: int) -> tuple[Status, Optional[dict], str]:
    lines = out.lstrip().split("\n", 1)
    head = lines[0].strip()
    rest = lines[1] if len(lines) > 1 else ""
    if head == "unsat":
        return Status.UNSAT, None, ""
    if head == "sat":
        try:
            values = F.parse_model(rest, script.variables)
        except F.ModelParseError as exc:
            return Status.ERROR, None, str(exc)
        missing = [v.name for v in script.variables if v.name not in values]
        if missing:
            return Status.ERROR, None, f"solver model lacks {missing[:5]}:\n{out}"
        try:
            ok = all(F.eval_formula(f, values) for f in script.formulas)
        except F.FormulaError as exc:
            return Status.ERROR, None, str(exc)
        if not ok:
            return Status.ERROR, None, f"solver model does not satisfy the assertions:\n{out}"
        return Status.SAT, values, ""
    reason = head or f"no answer (exit {returncode})"
    return Status.ERROR, None, f"{reason}\n{out}{err}".strip()


def solve(
    script: Script,
    cfg: Optional[SolverConfig] = None,
    cancel: Optional[CancelToken] = None,
    budget: Optional[float] = None,
) -> SolveResult:
    """Run one solver process on ``script``; blocking and reentrant."""
    cfg = cfg or SolverConfig()
    budget = cfg.budget if budget is None else budget
    stats = {"chars": len(script.text), "atoms": sum(F.size(f) for f in script.formulas)}
    if cfg.workdir:
        stats["dump"] = str(dump_artifacts(script, cfg.workdir))
    start = time.monotonic()
    tmp = None
    cmd = list(cfg.command)
    stdin_text = script.text
    if not cfg.use_stdin:
        tmp = tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False)
        tmp.write(script.text)
        tmp.close()
        cmd.append(tmp.name)
        stdin_text = ""
    try:
        try:
            proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                start_new_session=True,
            )
        except OSError as exc:
            return SolveResult(Status.ERROR, output=f"cannot start solver {cmd[0]!r}: {exc}", stats=stats)
        if cancel is not None and not cancel.register(proc):
            _stop(proc, cfg.kill_grace)
            return SolveResult(Status.CANCELLED, elapsed=time.monotonic() - start, stats=stats)
        try:
            out, err = proc.communicate(stdin_text, timeout=max(budget, 1e-3))
        except subprocess.TimeoutExpired:
            _stop(proc, cfg.kill_grace)
            return SolveResult(Status.TIMEOUT, elapsed=time.monotonic() - start, stats=stats)
        finally:
            if cancel is not None:
                cancel.unregister(proc)
        elapsed = time.monotonic() - start
        if cancel is not None and cancel.cancelled and proc.returncode < 0:
            return SolveResult(Status.CANCELLED, elapsed=elapsed, stats=stats)
        status, values, message = _interpret(script, out, err, proc.returncode)
        return SolveResult(status, values, elapsed, message or out, stats)
    finally:
        if tmp is not None:
            os.unlink(tmp.name)


def solver_version(cfg: Optional[SolverConfig] = None) -> str:
    cfg = cfg or SolverConfig()
    try:
        res = subprocess.run([cfg.command[0], "--version"], capture_output=True, text=True, timeout=10)
        return (res.stdout or res.stderr).strip().splitlines()[0]
    except (OSError, subprocess.TimeoutExpired, IndexError):
        return "unknown"


# ---------------------------------------------------------------- Φ pieces


def ball_constraints(model: Model, query: RobustnessQuery) -> object:
    """Admissible perturbations of ``query.x`` (norm ball, integrality via sorts, domain)."""
    eps = query.epsilon
    parts = []
    absolutes = []
    for spec, xi in zip(model.features, query.x):
        v = x_var(spec)
        if query.norm.value == "inf":
            lo, hi = xi - eps, xi + eps
            if spec.is_integer:
                lo, hi = Fraction(math.ceil(lo)), Fraction(math.floor(hi))
            parts += [F.ge(v, F.Const(lo)), F.le(v, F.Const(hi))]
        else:
            absolutes.append(F.Abs(F.sub(v, F.Const(xi))))
        if query.clamp_to_domain:
            if spec.lower is not None:
                parts.append(F.ge(v, F.Const(spec.lower)))
            if spec.upper is not None:
                parts.append(F.le(v, F.Const(spec.upper)))
    if absolutes:
        parts.append(F.le(F.add(*absolutes), F.Const(eps)))
    return F.conj(parts)


def overtakes(q: int, a: int) -> object:
    """``out_q`` beats ``out_a`` under the lowest-index tie-break."""
    return (F.gt if q > a else F.ge)(out_var(q), out_var(a))


def _decode(model: Model, query: RobustnessQuery, values: dict):
    x_prime = [values.get(x_var(spec).name, query.x[spec.index]) for spec in model.features]
    ce = make_counterexample(model, query, x_prime)
    ok, problems = validate_counterexample(model, query, ce)
    return ce, ok, problems


def verdict_from_sat(model: Model, query: RobustnessQuery, values: dict) -> Verdict:
    ce, ok, problems = _decode(model, query, values)
    if not ok:
        return Verdict(VerdictKind.UNKNOWN, reason="solver model failed native re-validation: " + "; ".join(problems))
    return Verdict(VerdictKind.NOT_ROBUST, ce)


def solve_per_class(
    model: Model,
    query: RobustnessQuery,
    cfg: Optional[SolverConfig] = None,
    width: Optional[int] = None,
    prune: bool = True,
    order: Optional[Sequence[int]] = None,
) -> Verdict:
    """Classifier robustness as c-1 independent "class q overtakes a" queries.

    Siblings run concurrently up to ``width``. A satisfiable q cancels every
    sibling with a higher index, so the reported counter-example always comes
    from the lowest satisfiable q, whatever the timing. ``order`` fixes the
    launch order of the q values.
    """
    if not isinstance(model.payload, Classifier):
        raise ValueError("per-class decomposition needs a classifier")
    check_query(model, query)
    cfg = cfg or SolverConfig()
    start = time.monotonic()
    a = eval_classifier(model.payload, query.x)[0]
    rivals = [q for q in range(model.payload.n_classes) if q != a]
    if order is not None:
        rivals = [q for q in order if q in rivals] + [q for q in rivals if q not in order]
    try:
        encodings, stats = encode_regressors(model, [a] + sorted(rivals), query, prune, deadline=start + cfg.budget)
    except BudgetExceeded:
        return Verdict(VerdictKind.TIMEOUT, elapsed=time.monotonic() - start, reason="budget spent while encoding")
    ball = ball_constraints(model, query)
    remaining = cfg.budget - (time.monotonic() - start)
    if remaining <= 0:
        return Verdict(VerdictKind.TIMEOUT, elapsed=time.monotonic() - start, prune_stats=stats)
    tokens = {q: CancelToken() for q in rivals}
    per_class: dict[int, SolveResult] = {}

    def run(q: int) -> SolveResult:
        if tokens[q].cancelled:
            return SolveResult(Status.CANCELLED)
        formulas = [ball, encodings[q], encodings[a], overtakes(q, a)]
        if F.FALSE in formulas:
            return SolveResult(Status.UNSAT, stats={"trivial": True})
        return solve(make_script(formulas), cfg, cancel=tokens[q], budget=remaining)

    found: Optional[Verdict] = None
    best = None
    errors = []
    width = max(1, width or len(rivals))
    with ThreadPoolExecutor(max_workers=min(width, len(rivals))) as pool:
        futures = {pool.submit(run, q): q for q in rivals}
        for fut in as_completed(futures):
            q = futures[fut]
            res = fut.result()
            per_class[q] = res
            if res.status == Status.SAT and (best is None or q < best):
                v = verdict_from_sat(model, query, res.assignment)
                if v.kind == VerdictKind.NOT_ROBUST:
                    found, best = v, q
                    for r in rivals:
                        if r > q:
                            tokens[r].cancel()
                else:
                    errors.append(f"class {q}: {v.reason}")
            elif res.status == Status.ERROR:
                errors.append(f"class {q}: {res.output.strip()[:500]}")
    elapsed = time.monotonic() - start
    solver_stats = {
        "per_class": {q: r.status.value for q, r in sorted(per_class.items())},
        "max_sibling_elapsed": max((r.elapsed for r in per_class.values()), default=0.0),
    }
    if found is not None:
        found.elapsed, found.prune_stats, found.solver_stats = elapsed, stats, solver_stats
        return found
    # an error outranks a timeout: the missing answer may hide a defect
    if errors:
        return Verdict(VerdictKind.UNKNOWN, None, elapsed, stats, solver_stats, "; ".join(errors))
    if any(r.status == Status.TIMEOUT for r in per_class.values()):
        return Verdict(VerdictKind.TIMEOUT, None, elapsed, stats, solver_stats, f"budget {cfg.budget}s")
    return Verdict(VerdictKind.ROBUST, None, elapsed, stats, solver_stats)
