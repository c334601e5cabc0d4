"""Local robustness queries and exact reasoning about the perturbation ball.

The helpers here answer "does the ball around ``x`` meet this box?" exactly,
for both norms, with integer features restricted to integer points and, when
``clamp_to_domain`` is set, feature domain bounds applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .intervals import Box, Interval, ball
from .model import FeatureSpec, Model
from .numbers import as_rational, as_vector


class Norm(str, Enum):
    LINF = "inf"
    L1 = "1"

    @classmethod
    def parse(cls, text) -> "Norm":
        if isinstance(text, Norm):
            return text
        key = str(text).strip().lower()
        aliases = {"inf": cls.LINF, "linf": cls.LINF, "infinity": cls.LINF, "1": cls.L1, "l1": cls.L1}
        if key not in aliases:
            raise ValueError(f"unsupported norm {text!r}; use 'inf' or '1'")
        return aliases[key]


@dataclass(frozen=True)
class RobustnessQuery:
    x: tuple[Fraction, ...]
    epsilon: Fraction
    delta: Optional[Fraction] = None
    norm: Norm = Norm.LINF
    clamp_to_domain: bool = False

    @classmethod
    def make(cls, x, epsilon, delta=None, norm="inf", clamp_to_domain=False) -> "RobustnessQuery":
        return cls(
            as_vector(x),
            as_rational(epsilon),
            None if delta is None else as_rational(delta),
            Norm.parse(norm),
            bool(clamp_to_domain),
        )

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be non-negative")

    def with_epsilon(self, epsilon) -> "RobustnessQuery":
        return RobustnessQuery(self.x, as_rational(epsilon), self.delta, self.norm, self.clamp_to_domain)

    def with_x(self, x) -> "RobustnessQuery":
        return RobustnessQuery(as_vector(x), self.epsilon, self.delta, self.norm, self.clamp_to_domain)


def check_query(model: Model, query: RobustnessQuery) -> None:
    """Raise ``ValueError`` when the query does not fit the model."""
    if len(query.x) != model.n_features:
        raise ValueError(f"input has {len(query.x)} features, model expects {model.n_features}")
    if model.is_classifier and query.delta is not None:
        raise ValueError("delta is only meaningful for regressors")
    if not model.is_classifier and query.delta is None:
        raise ValueError("a regressor query needs delta")
    for spec, v in zip(model.features, query.x):
        if spec.is_integer and v.denominator != 1:
            raise ValueError(f"feature {spec.label} is integer but input value is {v}")


def domain(spec: FeatureSpec, clamp: bool) -> Interval:
    if not clamp:
        return Interval()
    return Interval(spec.lower, spec.upper)


def coordinate_range(spec: FeatureSpec, query: RobustnessQuery, box: Optional[Box] = None) -> Interval:
    """Values coordinate ``spec.index`` may take: box ∩ per-coordinate ball ∩ domain."""
    i = spec.index
    iv = ball(query.x[i], query.epsilon).intersect(domain(spec, query.clamp_to_domain))
    if box is not None:
        iv = iv.intersect(box.get(i))
    return iv


def _coordinate_distance(spec: FeatureSpec, iv: Interval, value: Fraction):
    """(infimum distance, attained) from ``value`` to ``iv``; ``None`` if unreachable."""
    if iv.is_empty():
        return None
    if spec.is_integer:
        d = iv.integer_distance(value)
        return None if d is None else (d, True)
    return iv.distance(value)


def box_reachable(box: Box, query: RobustnessQuery, features: Sequence[FeatureSpec], only: Optional[Sequence[int]] = None) -> bool:
    """Whether some admissible perturbation of ``query.x`` lies in ``box``.

    ``only`` restricts the check to the given features (the rest are treated as
    free), which is how single-leaf pruning looks at just the path features.
    """
    idx = range(len(features)) if only is None else only
    total = Fraction(0)
    open_end = False
    for i in idx:
        spec = features[i]
        got = _coordinate_distance(spec, coordinate_range(spec, query, box), query.x[i])
        if got is None:
            return False
        if query.norm == Norm.L1:
            total += got[0]
            open_end = open_end or not got[1]
    if query.norm == Norm.L1:
        return total < query.epsilon or (total == query.epsilon and not open_end)
    return True


def box_witness(box: Box, query: RobustnessQuery, features: Sequence[FeatureSpec]) -> Optional[tuple[Fraction, ...]]:
    """A concrete admissible perturbation inside ``box`` closest to ``x``, or ``None``.

    Each coordinate goes to the nearest point of its allowed range; open
    endpoints are approached by a share of the remaining slack.
    """
    if not box_reachable(box, query, features):
        return None
    ranges = [coordinate_range(spec, query, box) for spec in features]
    dists = [_coordinate_distance(spec, iv, v) for spec, iv, v in zip(features, ranges, query.x)]
    if query.norm == Norm.L1:
        opened = [i for i, d in enumerate(dists) if not d[1]]
        spare = query.epsilon - sum((d[0] for d in dists), Fraction(0))
        share = spare / len(opened) if opened else Fraction(0)
    out = []
    for i, (spec, iv, v) in enumerate(zip(features, ranges, query.x)):
        if spec.is_integer:
            out.append(Fraction(iv.nearest_integer(v)))
            continue
        dist, attained = dists[i]
        if attained:
            out.append(iv.point_near(v, Fraction(0)))
        elif query.norm == Norm.L1:
            out.append(iv.point_near(v, share))
        else:
            out.append(iv.point_near(v, query.epsilon - dist))
    return tuple(out)


def distance(a: Sequence[Fraction], b: Sequence[Fraction], norm: Norm) -> Fraction:
    diffs = [abs(p - q) for p, q in zip(a, b)]
    if norm == Norm.L1:
        return sum(diffs, Fraction(0))
    return max(diffs, default=Fraction(0))


def in_ball(model: Model, query: RobustnessQuery, x_prime: Sequence[Fraction]) -> list[str]:
    """Reasons ``x_prime`` is not an admissible perturbation (empty if it is)."""
    problems = []
    if len(x_prime) != len(query.x):
        return [f"perturbed input has {len(x_prime)} features, expected {len(query.x)}"]
    d = distance(query.x, x_prime, query.norm)
    if d > query.epsilon:
        problems.append(f"distance exceeds epsilon ({d} > {query.epsilon})")
    for spec, v in zip(model.features, x_prime):
        if spec.is_integer and v.denominator != 1:
            problems.append(f"integer feature {spec.label} has non-integer value {v}")
        if query.clamp_to_domain and not domain(spec, True).contains(v):
            problems.append(f"feature {spec.label} value {v} outside its domain")
    return problems
