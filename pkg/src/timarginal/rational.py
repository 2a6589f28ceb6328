"""Exact rational scalars and their "p/q" string form."""
from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction

RationalLike = Union[Fraction, int, str]


def to_rational(value) -> Fraction:
    """Coerce ints, Fractions, mpq values and "p/q" strings to Fraction.

    Floats are rejected: nothing on the exact path may originate from one.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r} on an exact path")
    num = getattr(value, "numerator", None)
    den = getattr(value, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fmt(q) -> str:
    q = to_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def fmt_vec(vec: Iterable) -> list:
    return [fmt(q) for q in vec]


def parse_vec(items: Iterable) -> tuple:
    return tuple(to_rational(x) for x in items)
