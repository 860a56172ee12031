"""Exact rationals.

:class:`fractions.Fraction` already keeps numerator and denominator in lowest
terms with a positive denominator, so it is used directly as the library's
rational type.  This module only adds the text form used in files.
"""

from fractions import Fraction
from math import gcd

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(value) -> Fraction:
    """Coerce ``value`` to a Fraction, refusing floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string like '1/3'")
    if isinstance(value, str):
        return parse_rat(value)
    return Fraction(value)


def parse_rat(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_rat(value: Fraction) -> str:
    """Canonical ``"num/den"`` form; ``0/1`` and ``1/1`` included."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def is_power_of(n: int, m: int) -> bool:
    """True iff ``n == m**i`` for some ``i >= 0``."""
    if n < 1 or m < 2:
        return False
    while n % m == 0:
        n //= m
    return n == 1


def is_madic(value: Fraction, m: int) -> bool:
    return is_power_of(Fraction(value).denominator, m)


def rationals_up_to(bound: int, lo: Fraction = ZERO, hi: Fraction = ONE):
    """Rationals strictly inside ``(lo, hi)`` with denominator <= bound.

    Ordered by denominator, then numerator.
    """
    out = []
    for q in range(1, bound + 1):
        for p in range(1, q):
            if gcd(p, q) != 1:
                continue
            r = Fraction(p, q)
            if lo < r < hi:
                out.append(r)
    return out


def lcm_of_denominators(values) -> int:
    d = 1
    for v in values:
        q = Fraction(v).denominator
        d = d * q // gcd(d, q)
    return d
