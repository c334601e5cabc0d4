"""Exact rational intervals with open/closed ends, and boxes built from them.

An endpoint of ``None`` means unbounded on that side. Used by the encoder to
prune leaf clauses and by the oracle to decide leaf-tuple feasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


@dataclass(frozen=True)
class Interval:
    lower: Optional[Fraction] = None
    upper: Optional[Fraction] = None
    lower_strict: bool = False
    upper_strict: bool = False

    @classmethod
    def closed(cls, lower, upper) -> "Interval":
        return cls(lower, upper, False, False)

    @classmethod
    def point(cls, value) -> "Interval":
        return cls(value, value, False, False)

    def __repr__(self) -> str:
        lo = "-inf" if self.lower is None else str(self.lower)
        hi = "+inf" if self.upper is None else str(self.upper)
        return f"{'(' if self.lower_strict or self.lower is None else '['}{lo}, {hi}{')' if self.upper_strict or self.upper is None else ']'}"

    def with_upper(self, value: Fraction, strict: bool) -> "Interval":
        """Tighten the upper end (keeps whichever bound is tighter)."""
        if self.upper is None or value < self.upper or (value == self.upper and strict):
            return Interval(self.lower, value, self.lower_strict, strict)
        return self

    def with_lower(self, value: Fraction, strict: bool) -> "Interval":
        if self.lower is None or value > self.lower or (value == self.lower and strict):
            return Interval(value, self.upper, strict, self.upper_strict)
        return self

    def intersect(self, other: "Interval") -> "Interval":
        out = self
        if other.lower is not None:
            out = out.with_lower(other.lower, other.lower_strict)
        if other.upper is not None:
            out = out.with_upper(other.upper, other.upper_strict)
        return out

    def is_empty(self) -> bool:
        if self.lower is None or self.upper is None:
            return False
        if self.lower < self.upper:
            return False
        if self.lower == self.upper:
            return self.lower_strict or self.upper_strict
        return True

    def contains(self, value: Fraction) -> bool:
        if self.lower is not None:
            if value < self.lower or (value == self.lower and self.lower_strict):
                return False
        if self.upper is not None:
            if value > self.upper or (value == self.upper and self.upper_strict):
                return False
        return True

    def integer_bounds(self) -> tuple[Optional[int], Optional[int]]:
        """Smallest and largest integers inside (``None`` when unbounded)."""
        lo = hi = None
        if self.lower is not None:
            lo = math.floor(self.lower) + 1 if self.lower_strict else math.ceil(self.lower)
        if self.upper is not None:
            hi = math.ceil(self.upper) - 1 if self.upper_strict else math.floor(self.upper)
        return lo, hi

    def contains_integer(self) -> bool:
        lo, hi = self.integer_bounds()
        return lo is None or hi is None or lo <= hi

    def integers(self) -> range:
        lo, hi = self.integer_bounds()
        if lo is None or hi is None:
            raise ValueError(f"interval {self!r} has infinitely many integers")
        return range(lo, hi + 1)

    def integer_count(self) -> int:
        lo, hi = self.integer_bounds()
        if lo is None or hi is None:
            raise ValueError(f"interval {self!r} has infinitely many integers")
        return max(0, hi - lo + 1)

    def distance(self, value: Fraction) -> tuple[Fraction, bool]:
        """Infimum of ``|value - v|`` over the interval and whether it is attained.

        The interval must be non-empty.
        """
        if self.lower is not None and (value < self.lower or (value == self.lower and self.lower_strict)):
            return self.lower - value, not self.lower_strict
        if self.upper is not None and (value > self.upper or (value == self.upper and self.upper_strict)):
            return value - self.upper, not self.upper_strict
        return Fraction(0), True

    def integer_distance(self, value: Fraction) -> Optional[Fraction]:
        """Distance from ``value`` to the nearest integer inside, ``None`` if none."""
        point = self.nearest_integer(value)
        return None if point is None else abs(Fraction(point) - value)

    def nearest_integer(self, value: Fraction) -> Optional[int]:
        """Integer inside the interval closest to ``value``; ties go to the smaller."""
        lo, hi = self.integer_bounds()
        if lo is not None and hi is not None and lo > hi:
            return None
        below, above = math.floor(value), math.ceil(value)
        candidates = []
        for c in (below, above):
            if lo is not None and c < lo:
                c = lo
            if hi is not None and c > hi:
                c = hi
            candidates.append(c)
        return min(candidates, key=lambda c: (abs(Fraction(c) - value), c))

    def point_near(self, value: Fraction, slack: Fraction) -> Fraction:
        """A member of the interval at distance at most ``inf-distance + slack`` from ``value``.

        When the infimum is attained that point is returned. Otherwise the
        open endpoint is approached by ``min(slack, width / 2)``; ``slack`` must
        be positive in that case.
        """
        dist, attained = self.distance(value)
        if dist == 0 and attained:
            return value
        below = self.lower is not None and (value < self.lower or (value == self.lower and self.lower_strict))
        end = self.lower if below else self.upper
        if attained:
            return end
        if slack <= 0:
            raise ValueError("open endpoint needs positive slack")
        step = slack
        if self.lower is not None and self.upper is not None:
            step = min(step, (self.upper - self.lower) / 2)
        return end + step if below else end - step


def ball(center: Fraction, radius: Fraction) -> Interval:
    return Interval.closed(center - radius, center + radius)


@dataclass
class Box:
    """Per-feature intervals; absent features are unconstrained."""

    intervals: dict[int, Interval] = field(default_factory=dict)

    def get(self, feature: int) -> Interval:
        return self.intervals.get(feature, Interval())

    def constrain(self, feature: int, interval: Interval) -> None:
        self.intervals[feature] = self.get(feature).intersect(interval)

    def intersect(self, other: "Box") -> "Box":
        out = Box(dict(self.intervals))
        for f, iv in other.intervals.items():
            out.constrain(f, iv)
        return out

    def is_empty(self) -> bool:
        return any(iv.is_empty() for iv in self.intervals.values())

    def features(self) -> list[int]:
        return sorted(self.intervals)
