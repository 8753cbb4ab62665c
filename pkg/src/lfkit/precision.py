"""Precision plumbing shared by every numerical module.

mpmath's global context is the single source of truth for the working
precision.  The helpers here wrap it in a small configuration object so the
CLI, the verification suites and the tests can run the same computation at a
different number of bits without threading a context through every call.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpf, mpc

DEFAULT_PRECISION = 128


@dataclass(frozen=True)
class PrecisionConfig:
    """Binary working precision plus a guard margin for long accumulations."""

    prec: int = DEFAULT_PRECISION
    guard: int = 24

    def eps(self):
        """Granularity the configuration can resolve, with a safety slack."""
        with mp.workprec(self.prec):
            return mpf(2) ** (16 - self.prec)

    def tight_eps(self):
        with mp.workprec(self.prec):
            return mpf(2) ** (8 - self.prec)


DEFAULT_CONFIG = PrecisionConfig()


@contextmanager
def working(cfg_or_bits=None, extra: int = 0):
    """Context manager selecting the working precision in bits."""
    if cfg_or_bits is None:
        bits = DEFAULT_PRECISION
    elif isinstance(cfg_or_bits, PrecisionConfig):
        bits = cfg_or_bits.prec + (cfg_or_bits.guard if extra else 0)
    else:
        bits = int(cfg_or_bits)
    with mp.workprec(bits + extra):
        yield mp


def to_mpf(x):
    """Convert int, float, str, Fraction or mpf to mpf at current precision."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def to_mpc(x, y=None):
    if y is not None:
        return mpc(to_mpf(x), to_mpf(y))
    if isinstance(x, (complex, mpc)):
        return mpc(x)
    return mpc(to_mpf(x))


def det_str(x, digits: int = 30) -> str:
    """Deterministic decimal rendering used by the CLI and reports.

    The output depends only on the value and the requested digit count, so
    repeated runs at the same precision produce byte-identical text.
    """
    if isinstance(x, (mpc, complex)):
        re = det_str(mpc(x).real, digits)
        im = det_str(mpc(x).imag, digits)
        return f"{re} {'+' if not im.startswith('-') else '-'} {im.lstrip('-')}i"
    v = mpf(x)
    return mp.nstr(v, digits, strip_zeros=False, min_fixed=-4, max_fixed=6)
