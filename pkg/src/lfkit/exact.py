"""Exact root-of-unity arithmetic.

Character values, Gauss sums, Jacobi sums and Kloosterman sums are finite
sums of roots of unity.  Collecting terms by their exact phase (a Fraction
modulo 1) before any floating point happens keeps those sums free of
intermediate rounding: the only inexact step is the final evaluation of
e(2 pi i a/b) at the working precision.
"""

from __future__ import annotations

from fractions import Fraction

from mpmath import mp, mpc

__all__ = ["angle", "root_of_unity", "PhaseSum"]


def angle(num: int, den: int) -> Fraction:
    """The phase num/den reduced into [0, 1)."""
    return Fraction(num, den) % 1


_ROOTS = {}


def root_of_unity(a: Fraction) -> mpc:
    """e(a) = exp(2 pi i a) at the current working precision, cached.

    The cache key includes mp.prec so raising the precision never reuses a
    stale low-precision value.
    """
    a = a % 1
    key = (a.numerator, a.denominator, mp.prec)
    val = _ROOTS.get(key)
    if val is None:
        if a == 0:
            val = mpc(1)
        else:
            # expjpi(x) = exp(pi i x), so pass 2a; the ratio stays exact
            val = mp.expjpi(2 * mp.mpf(a.numerator) / a.denominator)
        _ROOTS[key] = val
    return val


class PhaseSum:
    """Accumulator for sums of the shape sum_j c_j e(a_j) with integer c_j.

    Terms are stored exactly as Fraction -> multiplicity.  evaluate() maps
    the collected phases through root_of_unity at the current precision.
    """

    __slots__ = ("_terms",)

    def __init__(self):
        self._terms = {}

    def add(self, a: Fraction, mult: int = 1):
        a = a % 1
        new = self._terms.get(a, 0) + mult
        if new:
            self._terms[a] = new
        else:
            self._terms.pop(a, None)

    def add_ratio(self, num: int, den: int, mult: int = 1):
        self.add(Fraction(num, den), mult)

    def __len__(self):
        return len(self._terms)

    def conjugate(self) -> "PhaseSum":
        out = PhaseSum()
        for a, m in self._terms.items():
            out.add(-a, m)
        return out

    def rotated(self, b: Fraction) -> "PhaseSum":
        """The sum multiplied by e(b)."""
        out = PhaseSum()
        for a, m in self._terms.items():
            out.add(a + b, m)
        return out

    def evaluate(self) -> mpc:
        total = mpc(0)
        # deterministic order: sort by phase
        for a in sorted(self._terms):
            total += self._terms[a] * root_of_unity(a)
        return total
