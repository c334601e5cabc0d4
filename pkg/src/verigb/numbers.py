"""Exact number helpers.

Everything numeric in the package is a :class:`fractions.Fraction`. Text forms
accepted on input are integers, decimals ("2.3") and ratios ("23/10").
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction
Number = Union[int, Fraction, str, float]


def as_rational(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # the shortest repr round-trips, so "0.1" stays 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def as_vector(values: Iterable[Number]) -> tuple[Fraction, ...]:
    return tuple(as_rational(v) for v in values)


def format_rational(value: Fraction) -> str:
    """Canonical text: "5", "-7/2"."""
    return str(value)


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1


def quantize_toward_zero(value: Fraction, denominator: int) -> Fraction:
    # int() on a Fraction truncates toward zero
    return Fraction(int(value * denominator), denominator)
