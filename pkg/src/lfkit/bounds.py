"""Certified tail bounds for truncated series.

Every truncation in the package is certified: the dropped mass is bounded
above by a closed expression evaluated here.  All bounds are elementary
(integral comparison, Rankin-style shifting of a divisor power series, or
completing the square under a Gaussian), and every return value is padded
by a relative 2^-40 so the final rounding cannot tip an upper bound below
the true tail.
"""

from __future__ import annotations

from math import isqrt

from mpmath import mp, mpf

from .arith import divisor_count

__all__ = [
    "pad",
    "zeta_tail",
    "divisor_series_tail",
    "divisor_log_series_tail",
    "power_tail",
    "geometric_tail",
    "gaussian_full_bound",
    "gaussian_tail_bound",
    "tau_sqrt_bound",
    "kloosterman_weil",
]

_PAD = None


def pad(x):
    """Inflate an upper bound so floating point rounding keeps it valid."""
    global _PAD
    if _PAD is None or _PAD[0] != mp.prec:
        _PAD = (mp.prec, 1 + mpf(2) ** (-40))
    return x * _PAD[1]


def zeta_tail(N: int, sigma) -> mpf:
    """Upper bound for sum_{n > N} n^-sigma, sigma > 1."""
    sigma = mpf(sigma)
    if sigma <= 1:
        raise ValueError("zeta_tail needs sigma > 1")
    N = mpf(N)
    return pad(N ** (1 - sigma) / (sigma - 1) + N ** (-sigma))


def _divisor_zeta(x, k: int):
    # sum tau(n)^k n^-x for k = 0, 1, 2
    if k == 0:
        return mp.zeta(x)
    if k == 1:
        return mp.zeta(x) ** 2
    if k == 2:
        return mp.zeta(x) ** 4 / mp.zeta(2 * x)
    raise ValueError("divisor weight k must be 0, 1 or 2")


def divisor_series_tail(N: int, sigma, k: int = 1) -> mpf:
    """Upper bound for sum_{n > N} tau(n)^k n^-sigma.

    Shift part of the decay into N^-eta: the tail is at most
    N^-eta * sum_n tau(n)^k n^-(sigma - eta) for every 0 < eta < sigma - 1.
    A small grid of eta values approximates the optimum; any grid point is
    a valid bound.
    """
    sigma = mpf(sigma)
    if sigma <= 1:
        raise ValueError("divisor_series_tail needs sigma > 1")
    best = None
    room = sigma - 1
    for frac in (mpf("0.35"), mpf("0.6"), mpf("0.8"), mpf("0.92")):
        eta = room * frac
        cand = mpf(N) ** (-eta) * _divisor_zeta(sigma - eta, k)
        if best is None or cand < best:
            best = cand
    return pad(best)


def divisor_log_series_tail(N: int, sigma, k: int = 1) -> mpf:
    """Upper bound for sum_{n > N} tau(n)^k log(n) n^-sigma.

    Uses log n <= n^e / e for every e > 0 (tightest available near e ~ 1/log N).
    """
    sigma = mpf(sigma)
    best = None
    for e in (mpf("0.02"), mpf("0.05"), mpf("0.1"), mpf("0.2")):
        if sigma - e <= 1:
            continue
        cand = divisor_series_tail(N, sigma - e, k) / e
        if best is None or cand < best:
            best = cand
    if best is None:
        raise ValueError("divisor_log_series_tail needs sigma > 1.02")
    return pad(best)


def power_tail(C0, p, step: int = 1) -> mpf:
    """Upper bound for sum over c > C0 with step | c of c^-p, p > 1."""
    p = mpf(p)
    if p <= 1:
        raise ValueError("power_tail needs p > 1")
    j0 = int(mpf(C0) / step) + 1
    j0 = mpf(max(j0, 1))
    return pad(mpf(step) ** (-p) * (j0 ** (-p) + j0 ** (1 - p) / (p - 1)))


def geometric_tail(first, ratio) -> mpf:
    r = abs(mpf(ratio)) if not isinstance(ratio, complex) else abs(ratio)
    r = mpf(r)
    if r >= 1:
        raise ValueError("geometric_tail needs |ratio| < 1")
    return pad(abs(first) / (1 - r))


def gaussian_full_bound(a2, b) -> mpf:
    """Upper bound for int_0^inf exp(b u - a2 u^2) du, a2 > 0."""
    a2 = mpf(a2)
    b = mpf(b)
    return pad(mp.sqrt(mp.pi / a2) * mp.exp(b * b / (4 * a2)))


def gaussian_tail_bound(a2, b, L) -> mpf:
    """Upper bound for int_L^inf exp(b u - a2 u^2) du, valid for 2 a2 L > b.

    Writing u = L + v, the integrand is exp(bL - a2 L^2) times
    exp((b - 2 a2 L) v - a2 v^2) <= exp((b - 2 a2 L) v).
    """
    a2, b, L = mpf(a2), mpf(b), mpf(L)
    slope = 2 * a2 * L - b
    if slope <= 0:
        return gaussian_full_bound(a2, b)
    return pad(mp.exp(b * L - a2 * L * L) / slope)


def tau_sqrt_bound(c: int) -> mpf:
    """tau(c) <= 2 sqrt(c), usable as a monotone majorant over ranges."""
    return 2 * mp.sqrt(c)


def kloosterman_weil(m: int, n: int, c: int, exact_tau: bool = True) -> mpf:
    """Weil bound gcd(m,n,c)^(1/2) c^(1/2) tau(c) for |S(m, n; c)|."""
    from math import gcd

    g = gcd(gcd(abs(m), abs(n)), c)
    if g == 0:
        g = c
    t = divisor_count(c) if exact_tau else 2 * isqrt(c) + 2
    return pad(mp.sqrt(g) * mp.sqrt(c) * t)
