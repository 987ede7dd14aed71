"""Canonical two-oscillator systems with omega = (2, -1) and a cubic resonance."""
from __future__ import annotations

from fractions import Fraction

from .algebra import CartesianPolynomial


def e1(a=1) -> CartesianPolynomial:
    """``x1^2 + x3^2 - (x2^2 + x4^2)/2 + a (x1 x2^2 - x1 x4^2 - 2 x2 x3 x4)``, already normal."""
    a = Fraction(a)
    return CartesianPolynomial(2, {
        (2, 0, 0, 0): Fraction(1),
        (0, 0, 2, 0): Fraction(1),
        (0, 2, 0, 0): Fraction(-1, 2),
        (0, 0, 0, 2): Fraction(-1, 2),
        (1, 2, 0, 0): a,
        (1, 0, 0, 2): -a,
        (0, 1, 1, 1): -2 * a,
    })


def e2(a=1, b=1) -> CartesianPolynomial:
    """``e1(a) + 4 b I1^2`` with ``I1 = (x1^2 + x3^2)/2``."""
    b = Fraction(b)
    return e1(a) + CartesianPolynomial(2, {
        (4, 0, 0, 0): b,
        (2, 0, 2, 0): 2 * b,
        (0, 0, 4, 0): b,
    })


E1_TEXT = """\
# omega = (2, -1), resonance k = (1, 2)
n 2
term 1/1 2 0 0 0
term 1/1 0 0 2 0
term -1/2 0 2 0 0
term -1/2 0 0 0 2
term 1/1 1 2 0 0
term -1/1 1 0 0 2
term -2/1 0 1 1 1
"""
