"""Verdicts and counter-examples, with native re-validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

from .model import Classifier, Model, eval_classifier, eval_regressor
from .numbers import as_vector, format_rational
from .query import Norm, RobustnessQuery, distance, in_ball


class VerdictKind(str, Enum):
    ROBUST = "robust"
    NOT_ROBUST = "not_robust"
    TIMEOUT = "timeout"
    UNKNOWN = "unknown"


Output = Union[int, Fraction]


@dataclass(frozen=True)
class CounterExample:
    x: tuple[Fraction, ...]
    x_prime: tuple[Fraction, ...]
    original_output: Output
    adversarial_output: Output
    distance: Fraction
    delta_vector: tuple[Fraction, ...]
    norm: Norm = Norm.LINF

    def to_json(self, model: Optional[Model] = None) -> dict[str, Any]:
        def out(v):
            return v if isinstance(v, int) else format_rational(v)

        payload = {
            "x": [format_rational(v) for v in self.x],
            "x_prime": [format_rational(v) for v in self.x_prime],
            "delta": [format_rational(v) for v in self.delta_vector],
            "distance": format_rational(self.distance),
            "norm": self.norm.value,
            "original_output": out(self.original_output),
            "adversarial_output": out(self.adversarial_output),
        }
        if model is not None and isinstance(model.payload, Classifier):
            payload["original_label"] = model.payload.label(self.original_output)
            payload["adversarial_label"] = model.payload.label(self.adversarial_output)
        return payload

    @classmethod
    def from_json(cls, raw: dict) -> "CounterExample":
        def out(v):
            return v if isinstance(v, int) else Fraction(v)

        return cls(
            as_vector(raw["x"]),
            as_vector(raw["x_prime"]),
            out(raw["original_output"]),
            out(raw["adversarial_output"]),
            Fraction(raw["distance"]),
            as_vector(raw["delta"]),
            Norm.parse(raw.get("norm", "inf")),
        )


@dataclass
class Verdict:
    kind: VerdictKind
    counterexample: Optional[CounterExample] = None
    elapsed: float = 0.0
    prune_stats: Any = None
    solver_stats: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def robust(self) -> bool:
        return self.kind == VerdictKind.ROBUST

    def __str__(self) -> str:
        text = self.kind.value
        if self.counterexample is not None:
            text += " x'=[" + ", ".join(map(str, self.counterexample.x_prime)) + "]"
        if self.reason:
            text += f" ({self.reason})"
        return text


def _output(model: Model, x: Sequence[Fraction]) -> Output:
    if isinstance(model.payload, Classifier):
        return eval_classifier(model.payload, x)[0]
    return eval_regressor(model.payload, x)


def make_counterexample(model: Model, query: RobustnessQuery, x_prime: Sequence[Fraction]) -> CounterExample:
    xp = as_vector(x_prime)
    return CounterExample(
        x=query.x,
        x_prime=xp,
        original_output=_output(model, query.x),
        adversarial_output=_output(model, xp),
        distance=distance(query.x, xp, query.norm),
        delta_vector=tuple(b - a for a, b in zip(query.x, xp)),
        norm=query.norm,
    )


def validate_counterexample(model: Model, query: RobustnessQuery, ce: CounterExample) -> tuple[bool, list[str]]:
    """Re-evaluate ``ce`` natively; ``(True, [])`` iff every claim in it holds exactly."""
    problems = []
    if tuple(ce.x) != tuple(query.x):
        problems.append("counter-example is for a different input")
    problems += in_ball(model, query, ce.x_prime)
    if problems and any(p.startswith("perturbed input has") for p in problems):
        return False, problems
    d = distance(query.x, ce.x_prime, query.norm)
    if d != ce.distance:
        problems.append(f"recorded distance {ce.distance} differs from actual {d}")
    if tuple(ce.delta_vector) != tuple(b - a for a, b in zip(query.x, ce.x_prime)):
        problems.append("delta vector is not x' - x")
    orig = _output(model, query.x)
    adv = _output(model, ce.x_prime)
    if orig != ce.original_output:
        problems.append(f"recorded original output {ce.original_output} differs from actual {orig}")
    if adv != ce.adversarial_output:
        problems.append(f"recorded adversarial output {ce.adversarial_output} differs from actual {adv}")
    if isinstance(model.payload, Classifier):
        if adv == orig:
            problems.append(f"class does not change (stays {orig})")
    elif query.delta is None or abs(orig - adv) < query.delta:
        problems.append(f"output change {abs(orig - adv)} is below delta {query.delta}")
    return not problems, problems
