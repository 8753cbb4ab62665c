"""Hurwitz zeta, Dirichlet L-functions and the Estermann zeta function.

The Hurwitz zeta function is computed by Euler-Maclaurin summation with an
explicit remainder bound, so every value carries a certificate.  Dirichlet
L-functions are finite combinations of Hurwitz values; the additively
twisted divisor generating function (the Estermann function) is a finite
bilinear combination of Hurwitz values, which keeps its analytic
continuation, functional equation, residues and Laurent data all reachable
from one evaluator.

mpmath's own zeta is deliberately not used here except as an independent
oracle inside the test suite.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

from mpmath import mp, mpc, mpf

from .arith import divisors, euler_phi, factorize, inv_mod, moebius
from .bounds import divisor_series_tail, pad, zeta_tail
from .exact import root_of_unity

__all__ = [
    "hurwitz_zeta",
    "hurwitz_zeta_with_error",
    "zeta",
    "zeta_q",
    "dirichlet_l",
    "dirichlet_l_series",
    "periodic_zeta",
    "hurwitz_reflection_sides",
    "l_quadratic_5_closed",
    "estermann",
    "estermann_series",
    "estermann_reflected",
    "estermann_residue",
    "estermann_laurent_at_one",
    "sigma_power",
    "sigma_table",
    "divisor_product_closed",
    "sigma_ramanujan_expansion",
    "hecke_relation_check",
    "ramanujan_identity_check",
    "sigma_rq_dirichlet_series",
]


# === Hurwitz zeta by Euler-Maclaurin with certified remainder ===


@lru_cache(maxsize=512)
def _bern(k: int) -> mpf:
    with mp.workprec(mp.prec + 16):
        return mp.bernoulli(k)


def hurwitz_zeta_with_error(s, a):
    """(value, certified absolute error bound) for zeta(s, a), a > 0, s != 1.

    Euler-Maclaurin: sum the first N terms, add the integral and boundary
    corrections, then Bernoulli corrections until the explicit remainder
    bound stops improving or meets the working epsilon.
    """
    s = mpc(s)
    a = mpf(a)
    if a <= 0:
        raise ValueError("hurwitz zeta needs a > 0")
    if abs(s - 1) < mpf(2) ** (-mp.prec // 2):
        raise ValueError("pole at s = 1")
    sigma = s.real
    N = max(24, int(mp.prec * 0.5) + int(0.7 * abs(s.imag)))
    with mp.workprec(mp.prec + 32):
        total = mpc(0)
        for n in range(N):
            total += (n + a) ** (-s)
        base = N + a
        total += base ** (1 - s) / (s - 1)
        total += base ** (-s) / 2
        # Bernoulli corrections: term_j uses the rising factorial of length 2j-1
        rising = s  # s (s+1) ... ; maintained incrementally
        power = base ** (-s - 1)
        best_err = None
        best_total = total
        corr = total
        j = 1
        while j <= 60:
            term = _bern(2 * j) / mp.factorial(2 * j) * rising * power
            corr += term
            # remainder bound after including term_j
            rise_next = rising * (s + 2 * j - 1) * (s + 2 * j)
            bnd = (
                abs(_bern(2 * j + 2)) / mp.factorial(2 * j + 2)
                * abs(rise_next)
                * base ** (-sigma - 2 * j - 1)
                * abs(s + 2 * j + 1)
            )
            denom = sigma + 2 * j + 1
            if denom <= 0:
                j += 1
                rising = rise_next
                power = power / (base * base)
                continue
            bnd = bnd / denom
            if best_err is None or bnd < best_err:
                best_err = bnd
                best_total = corr
                if bnd < mpf(2) ** (-mp.prec - 8) * max(1, abs(corr)):
                    break
            else:
                break
            rising = rise_next
            power = power / (base * base)
            j += 1
        if best_err is None:
            raise ArithmeticError("euler-maclaurin did not converge")
    return best_total, pad(best_err)


def hurwitz_zeta(s, a) -> mpc:
    return hurwitz_zeta_with_error(s, a)[0]


def zeta(s) -> mpc:
    return hurwitz_zeta(s, 1)


def zeta_q(s, q: int) -> mpc:
    """Riemann zeta with the Euler factors at primes dividing q removed."""
    v = zeta(s)
    s = mpc(s)
    for p, _ in factorize(q):
        v *= 1 - mpf(p) ** (-s)
    return v


# === Dirichlet L ===


def dirichlet_l(s, chi, omit_primes=()) -> mpc:
    """L(s, chi) for any modulus, via Hurwitz zetas at a/q.

    At s = 1 (nonprincipal chi) the simple poles of the Hurwitz values
    cancel; the implementation switches to the digamma formula there.
    omit_primes divides out the Euler factors at the listed primes, the
    L^q notation of the moment formulas.
    """
    q = chi.modulus
    s = mpc(s)
    if q == 1:
        val = zeta(s)
    elif chi.is_principal:
        val = zeta_q(s, q)
    elif abs(s - 1) < mpf(2) ** (-30):
        tab = chi.value_table()
        total = mpc(0)
        for aa in range(1, q):
            v = tab[aa]
            if v != 0:
                total += v * mp.digamma(mpf(aa) / q)
        val = -total / q
    else:
        tab = chi.value_table()
        total = mpc(0)
        for aa in range(1, q):
            v = tab[aa]
            if v != 0:
                total += v * hurwitz_zeta(s, mpf(aa) / q)
        val = q ** (-s) * total
    for p in omit_primes:
        val *= 1 - chi(p) * mpf(p) ** (-s)
    return val


def periodic_zeta(alpha, s) -> mpc:
    """Continuation of sum e(alpha n) n^-s for rational alpha.

    Written as q^-s sum over b mod q of e(ab/q) zeta(s, b/q), the b = q
    term contributing e(a) zeta(s, 1).  alpha is reduced mod 1; the only
    pole is s = 1 at integer alpha.
    """
    alpha = Fraction(alpha) % 1
    s = mpc(s)
    a, q = alpha.numerator, alpha.denominator
    total = mpc(0)
    for b in range(1, q + 1):
        total += root_of_unity(Fraction(a * b, q)) * hurwitz_zeta(s, mpf(b) / q)
    return q ** (-s) * total


def hurwitz_reflection_sides(s, a: int, q: int):
    """Both sides of the reflection formula for zeta(s, a/q).

    lhs = zeta(s, a/q); rhs = G^-(1-s) per(a/q) + G^+(1-s) per(-a/q)
    where G^{+-}(z) = (2 pi)^-z Gamma(z) e(+-z/4) and per is the
    continued additively twisted zeta at 1-s.
    """
    s = mpc(s)
    z = 1 - s

    def gfac(sign):
        return (2 * mp.pi) ** (-z) * mp.gamma(z) * mp.exp(sign * mp.mpc(0, 1) * mp.pi * z / 2)

    lhs = hurwitz_zeta(s, mpf(a) / q)
    rhs = gfac(-1) * periodic_zeta(Fraction(a, q), z) + gfac(1) * periodic_zeta(
        Fraction(-a, q), z
    )
    return lhs, rhs


def dirichlet_l_series(s, chi, N: int):
    """(truncated Dirichlet series, certified tail bound), Re s > 1."""
    s = mpc(s)
    sigma = s.real
    if sigma <= 1:
        raise ValueError("series route needs Re s > 1")
    tab = chi.value_table()
    q = chi.modulus
    total = mpc(0)
    for n in range(1, N + 1):
        v = tab[n % q]
        if v != 0:
            total += v * mpf(n) ** (-s)
    return total, zeta_tail(N, sigma)


def l_quadratic_5_closed() -> mpf:
    """L(1, chi_5) for the quadratic character mod 5, in closed form."""
    return 2 * mp.log((1 + mp.sqrt(5)) / 2) / mp.sqrt(5)


# === Estermann zeta ===


def estermann(s, lam, h: int, ell: int) -> mpc:
    """D(s, lam; h/ell) = sum sigma_lam(n) e(n h / ell) n^-s, continued.

    Evaluated through the bilinear Hurwitz expansion
    ell^(lam - 2s) sum_{a, b mod ell} e(a b h / ell)
    zeta(s, a/ell) zeta(s - lam, b/ell),
    valid for all s away from the poles s = 1 and s = 1 + lam.
    """
    s = mpc(s)
    lam = mpc(lam)
    if ell < 1:
        raise ValueError("denominator must be positive")
    za = [hurwitz_zeta(s, mpf(a) / ell) for a in range(1, ell + 1)]
    zb = [hurwitz_zeta(s - lam, mpf(b) / ell) for b in range(1, ell + 1)]
    total = mpc(0)
    for a in range(1, ell + 1):
        row = mpc(0)
        for b in range(1, ell + 1):
            row += root_of_unity(Fraction(a * b * h, ell)) * zb[b - 1]
        total += za[a - 1] * row
    return mpf(ell) ** (lam - 2 * s) * total


def estermann_series(s, lam, h: int, ell: int, N: int):
    """(truncated defining series, certified tail), Re s > 1 + max(0, Re lam)."""
    s = mpc(s)
    lam = mpc(lam)
    sigma = s.real
    shift = max(0, lam.real)
    if sigma - shift <= 1:
        raise ValueError("series route needs Re s > 1 + max(0, Re lam)")
    total = mpc(0)
    sig = sigma_table(N, lam)
    for n in range(1, N + 1):
        total += sig[n] * root_of_unity(Fraction(n * h, ell)) * mpf(n) ** (-s)
    # |sigma_lam(n)| <= tau(n) n^max(0, Re lam)
    return total, divisor_series_tail(N, sigma - shift, 1)


def estermann_reflected(s, lam, h: int, ell: int) -> mpc:
    """The functional-equation image of D(s, lam; h/ell).

    Equals 2 (2 pi)^(2s - lam - 2) ell^(1 + lam - 2s) Gamma(1-s)
    Gamma(1 + lam - s) { D(1-s, -lam; hbar/ell) cos(pi lam / 2)
    - D(1-s, -lam; -hbar/ell) cos(pi (s - lam/2)) }, h hbar = 1 mod ell.
    """
    s = mpc(s)
    lam = mpc(lam)
    if gcd(h, ell) != 1:
        raise ValueError("functional equation needs gcd(h, ell) = 1")
    hbar = inv_mod(h, ell) if ell > 1 else 0
    pref = (
        2
        * (2 * mp.pi) ** (2 * s - lam - 2)
        * mpf(ell) ** (1 + lam - 2 * s)
        * mp.gamma(1 - s)
        * mp.gamma(1 + lam - s)
    )
    main = estermann(1 - s, -lam, hbar, ell) * mp.cos(mp.pi * lam / 2)
    cross = estermann(1 - s, -lam, -hbar, ell) * mp.cos(mp.pi * (s - lam / 2))
    return pref * (main - cross)


def estermann_residue(lam, h: int, ell: int, pole: str) -> mpc:
    """Residue at s = 1 ('one') or s = 1 + lam ('one+lam'), lam != 0."""
    lam = mpc(lam)
    if pole == "one":
        return mpf(ell) ** (lam - 1) * zeta(1 - lam)
    if pole == "one+lam":
        return mpf(ell) ** (-lam - 1) * zeta(1 + lam)
    raise ValueError("pole must be 'one' or 'one+lam'")


def estermann_laurent_at_one(h: int, ell: int):
    """(c_-2, c_-1) of the double pole of D(s, 0; h/ell) at s = 1."""
    return mpf(ell) ** (-1), 2 * (mp.euler - mp.log(ell)) / ell


# === divisor power sums ===


def sigma_power(n: int, lam) -> mpc:
    """sum over d | n of d^lam."""
    lam = mpc(lam)
    total = mpc(0)
    for d in divisors(n):
        total += mpf(d) ** lam
    return total


def sigma_table(N: int, lam):
    """sigma_lam(n) for n = 0..N by divisor sieve; index 0 unused."""
    lam = mpc(lam)
    tab = [mpc(0)] + [mpc(1)] * N
    for d in range(2, N + 1):
        pd = mpf(d) ** lam
        for m in range(d, N + 1, d):
            tab[m] += pd
    return tab


def divisor_product_closed(alpha, beta, s) -> mpc:
    """sum over m of sigma_alpha(m) sigma_beta(m) m^-s, in zeta terms.

    zeta(s) zeta(s-alpha) zeta(s-beta) zeta(s-alpha-beta) / zeta(2s-alpha-beta),
    absolutely convergent for Re s > 1 + max combinations.
    """
    alpha = mpc(alpha)
    beta = mpc(beta)
    s = mpc(s)
    return (
        zeta(s)
        * zeta(s - alpha)
        * zeta(s - beta)
        * zeta(s - alpha - beta)
        / zeta(2 * s - alpha - beta)
    )


def sigma_ramanujan_expansion(n: int, xi, q: int, L: int):
    """(truncated expansion, certified tail) of sigma_xi(n) for (n, q) = 1.

    sigma_xi(n) = zeta_q(1 - xi) sum over ell coprime to q of
    ell^(xi - 1) r_ell(n), valid for Re xi < 0.
    """
    from .arith import ramanujan_sum, sigma_int

    xi = mpc(xi)
    if xi.real >= 0:
        raise ValueError("expansion needs Re xi < 0")
    if gcd(n, q) != 1:
        raise ValueError("expansion stated for gcd(n, q) = 1")
    zq = zeta_q(1 - xi, q)
    total = mpc(0)
    for ell in range(1, L + 1):
        if gcd(ell, q) != 1:
            continue
        total += mpf(ell) ** (xi - 1) * ramanujan_sum(n, ell)
    # |r_ell(n)| <= sigma(gcd(n, ell)) <= sigma(n)
    tail = abs(zq) * sigma_int(n, 1) * zeta_tail(L, 1 - xi.real)
    return zq * total, pad(tail)


def hecke_relation_check(m: int, n: int, w) -> bool:
    """sigma_w(mn) = sum over c | (m,n) of mu(c) c^w sigma_w(m/c) sigma_w(n/c).

    Integer w is checked in exact arithmetic, anything else at working
    precision with an 8-bit slack.
    """
    from .arith import sigma_int

    g = gcd(m, n)
    if isinstance(w, int) and w >= 0:
        rhs = 0
        for c in divisors(g):
            mu = moebius(c)
            if mu:
                rhs += mu * c**w * sigma_int(m // c, w) * sigma_int(n // c, w)
        return sigma_int(m * n, w) == rhs
    w = mpc(w)
    lhs = sigma_power(m * n, w)
    rhs = mpc(0)
    for c in divisors(g):
        mu = moebius(c)
        if mu:
            rhs += mu * mpf(c) ** w * sigma_power(m // c, w) * sigma_power(n // c, w)
    return abs(lhs - rhs) <= mpf(2) ** (8 - mp.prec) * (1 + abs(lhs))


def ramanujan_identity_check(alpha, beta, s, N: int, q: int = 1):
    """Truncated sum sigma_alpha(m) sigma_beta(m) m^-s against its zeta form.

    With q > 1 both sides drop the primes dividing q: the m-sum keeps only
    (m, q) = 1 and each zeta factor loses its Euler factors at q.  Returns
    (lhs, rhs, certified lhs tail).
    """
    alpha = mpc(alpha)
    beta = mpc(beta)
    s = mpc(s)
    a0, b0 = max(0, alpha.real), max(0, beta.real)
    if s.real <= 1 + a0 + b0:
        raise ValueError("needs Re s > 1 + max(0, Re alpha) + max(0, Re beta)")
    ta = sigma_table(N, alpha)
    tb = sigma_table(N, beta)
    lhs = mpc(0)
    for m in range(1, N + 1):
        if q == 1 or gcd(m, q) == 1:
            lhs += ta[m] * tb[m] * mpf(m) ** (-s)
    rhs = (
        zeta_q(s, q)
        * zeta_q(s - alpha, q)
        * zeta_q(s - beta, q)
        * zeta_q(s - alpha - beta, q)
        / zeta_q(2 * s - alpha - beta, q)
    )
    tail = divisor_series_tail(N, s.real - a0 - b0, 2)
    return lhs, rhs, pad(tail)


def sigma_rq_dirichlet_series(w, s, q: int, N: int):
    """Truncated sum sigma_w(n) r_q(n) n^-s against its convolution form.

    rhs = (f * g * mu)(q) zeta(s) zeta(s - w) with f(n) = sigma_w(n) n^{1-s}
    and g(n) = mu(n) n^{1+w-2s}.  Returns (lhs, rhs, certified lhs tail).
    """
    from .arith import ramanujan_sum, sigma_int

    w = mpc(w)
    s = mpc(s)
    if s.real <= 1 + max(0, w.real):
        raise ValueError("needs Re s > 1 + max(0, Re w)")
    sig = sigma_table(N, w)
    lhs = mpc(0)
    for n in range(1, N + 1):
        r = ramanujan_sum(n, q)
        if r:
            lhs += sig[n] * r * mpf(n) ** (-s)
    conv = mpc(0)
    for a in divisors(q):
        fa = sigma_power(a, w) * mpf(a) ** (1 - s)
        for b in divisors(q // a):
            mb = moebius(b)
            if mb == 0:
                continue
            mc = moebius(q // (a * b))
            if mc == 0:
                continue
            conv += fa * mb * mpf(b) ** (1 + w - 2 * s) * mc
    rhs = conv * zeta(s) * zeta(s - w)
    tail = sigma_int(q, 1) * divisor_series_tail(N, s.real - max(0, w.real), 1)
    return lhs, rhs, pad(tail)
