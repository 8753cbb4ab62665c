"""Kloosterman-type exponential sums, plain, twisted and cusp-attached.

The complete sums are evaluated exactly as collections of rational phases
(see exact.PhaseSum).  For bulk work inside the moment pipelines there is a
per-modulus table that prefetches unit inverses, character values and the
c-th roots of unity once and then prices each additional (m, n) pair at
phi(c) complex additions.

Cusp-attached sums are supported for the three cusps that occur in the
moment formulas on Gamma_0(N): infinity, zero, and the Atkin-Lehner cusp
1/r for r || N.  The zero cusp coincides with the Atkin-Lehner cusp at
r = 1, which doubles as a consistency check.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np
from mpmath import mp, mpc, mpf

from .arith import crt, divisors, euler_phi, inv_mod, moebius, smooth_split
from .bounds import kloosterman_weil
from .characters import DirichletCharacter
from .exact import PhaseSum, root_of_unity

__all__ = [
    "kloosterman",
    "kloosterman_twisted",
    "KloostermanTable",
    "kloosterman_via_characters",
    "kloosterman_via_gauss_squares",
    "weil_ratio",
    "weil_scan",
    "cusp_moduli",
    "cusp_kloosterman",
    "cusp_kloosterman_zero_closed",
    "crt_inverse_check",
    "geometric_sum",
    "twisted_average_lhs",
    "twisted_average_rhs",
    "moduli_switch_lhs",
    "moduli_switch_rhs",
]


# === complete sums, exact ===


def kloosterman(m: int, n: int, c: int) -> mpc:
    """S(m, n; c) = sum over units d mod c of e((m d + n dbar) / c)."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c == 1:
        return mpc(1)
    ps = PhaseSum()
    for d in range(1, c):
        if gcd(d, c) != 1:
            continue
        dbar = inv_mod(d, c)
        ps.add(Fraction(m * d + n * dbar, c))
    return ps.evaluate()


def kloosterman_twisted(psi: DirichletCharacter, m: int, n: int, c: int) -> mpc:
    """S_psi(m, n; c) with nebentypus psi; requires modulus(psi) | c."""
    if c % psi.modulus:
        raise ValueError("character modulus must divide c")
    if c == 1:
        return mpc(1)
    ps = PhaseSum()
    for d in range(1, c):
        if gcd(d, c) != 1:
            continue
        a = psi.angle(d)
        if a is None:
            continue
        dbar = inv_mod(d, c)
        ps.add(a + Fraction(m * d + n * dbar, c))
    return ps.evaluate()


class KloostermanTable:
    """Bulk evaluator of S_psi(m, +-n; c) for one fixed modulus c.

    Precomputes the units, their inverses, the character values and the
    c-th roots of unity at the current precision.  sum_pair charges
    phi(c) complex additions for both signs together.
    """

    def __init__(self, c: int, psi: DirichletCharacter | None = None):
        if psi is not None and c % psi.modulus:
            raise ValueError("character modulus must divide c")
        self.c = c
        units = []
        invs = []
        for d in range(1, c) if c > 1 else [0]:
            if c > 1 and gcd(d, c) != 1:
                continue
            units.append(d)
            invs.append(inv_mod(d, c) if c > 1 else 0)
        self.units = units
        self.invs = invs
        self.roots = [root_of_unity(Fraction(k, c)) for k in range(c)]
        if psi is None:
            self.weights = None
        else:
            tab = psi.value_table()
            self.weights = [tab[d % psi.modulus] for d in units]

    def sum_pair(self, m: int, n: int):
        """(S_psi(m, n; c), S_psi(m, -n; c))."""
        c = self.c
        if c == 1:
            return mpc(1), mpc(1)
        plus = mpc(0)
        minus = mpc(0)
        roots = self.roots
        if self.weights is None:
            for d, dbar in zip(self.units, self.invs):
                md = m * d
                nd = n * dbar
                plus += roots[(md + nd) % c]
                minus += roots[(md - nd) % c]
        else:
            for d, dbar, w in zip(self.units, self.invs, self.weights):
                md = m * d
                nd = n * dbar
                plus += w * roots[(md + nd) % c]
                minus += w * roots[(md - nd) % c]
        return plus, minus

    def sum(self, m: int, n: int) -> mpc:
        return self.sum_pair(m, n)[0]


# === character-expansion routes ===


def kloosterman_via_characters(a: int, b: int, q: int) -> mpc:
    """S(a, b; q) through multiplicative characters mod q.

    Splitting a = a0 a' and b = b0 b' with a0, b0 | q^inf and the primed
    parts coprime to q,
    S(a, b; q) = (1/phi(q)) sum over psi mod q of
    tau(psi, a0) tau(psi, b0) psibar(a' b').
    """
    from .characters import character_group

    a0, a1 = smooth_split(a, q)
    b0, b1 = smooth_split(b, q)
    total = mpc(0)
    for psi in character_group(q):
        v = psi.conjugate()(a1 * b1)
        if v == 0:
            continue
        total += psi.gauss_sum_twisted(a0) * psi.gauss_sum_twisted(b0) * v
    return total / euler_phi(q)


def kloosterman_via_gauss_squares(a: int, b: int, q: int) -> mpc:
    """S(a, b; q) = (1/phi(q)) sum_psi tau(psi)^2 psibar(a b), for (ab, q) = 1."""
    from .characters import character_group

    if gcd(a * b, q) != 1:
        raise ValueError("this route needs gcd(ab, q) = 1")
    total = mpc(0)
    for psi in character_group(q):
        g = psi.gauss_sum()
        total += g * g * psi.conjugate()(a * b)
    return total / euler_phi(q)


# === Weil bound scanning ===


def weil_ratio(m: int, n: int, c: int) -> mpf:
    """|S(m, n; c)| divided by the Weil bound gcd^(1/2) c^(1/2) tau(c)."""
    return abs(kloosterman(m, n, c)) / kloosterman_weil(m, n, c)


def weil_scan(m_max: int, n_max: int, c_max: int, flag_above: float = 0.999):
    """Scan |S(m,n;c)| against the Weil bound over a box, in float64.

    Returns (worst_ratio, flagged) where flagged lists (m, n, c, ratio)
    for every triple whose float ratio exceeds flag_above.  Flagged triples
    should be rechecked at full precision by the caller; float64 is used
    only to decide where to look harder, never to certify.
    """
    from .arith import divisor_count

    worst = 0.0
    flagged = []
    for c in range(1, c_max + 1):
        units = np.array(
            [d for d in range(1, c) if gcd(d, c) == 1] if c > 1 else [0],
            dtype=np.int64,
        )
        if c > 1:
            invs = np.array([inv_mod(int(d), c) for d in units], dtype=np.int64)
        else:
            invs = units
        tau_c = divisor_count(c)
        sq_c = np.sqrt(c)
        base = np.exp(2j * np.pi * np.arange(c) / c) if c > 1 else np.ones(1)
        for m in range(1, m_max + 1):
            md = (m * units) % c
            for n in range(1, n_max + 1):
                idx = (md + n * invs) % c
                s = np.abs(base[idx].sum())
                g = gcd(gcd(m, n), c)
                ratio = s / (np.sqrt(g) * sq_c * tau_c)
                if ratio > worst:
                    worst = ratio
                if ratio > flag_above:
                    flagged.append((m, n, c, float(ratio)))
    return worst, flagged


# === cusp-attached sums on Gamma_0(N) ===


def _parse_cusp(label):
    if label in ("infinity", "inf", "oo"):
        return ("infinity", 0)
    if label == "zero" or label == "0":
        return ("atkin-lehner", 1)
    if isinstance(label, str) and label.startswith("al:"):
        return ("atkin-lehner", int(label[3:]))
    raise ValueError(f"unsupported cusp label {label!r}")


def cusp_moduli(level: int, cusp_from, cusp_to, count: int):
    """First `count` admissible moduli for the cusp pair, as (c0, real).

    The real modulus is c0 for (infinity, infinity) and c0 sqrt(s) for
    (infinity, 1/r) with level = r s.  Only pairs with first cusp infinity
    are supported.
    """
    kf, _ = _parse_cusp(cusp_from)
    kt, r = _parse_cusp(cusp_to)
    if kf != "infinity":
        raise ValueError("unsupported cusp pair: first cusp must be infinity")
    out = []
    if kt == "infinity":
        c = level
        while len(out) < count:
            out.append((c, mpf(c)))
            c += level
        return out
    s = level // r
    if r * s != level or gcd(r, s) != 1:
        raise ValueError("atkin-lehner cusp needs r || level")
    sq = mp.sqrt(s)
    c0 = r
    while len(out) < count:
        if gcd(c0, s) == 1:
            out.append((c0, c0 * sq))
        c0 += r
    return out


def cusp_kloosterman(level, psi, cusp_from, cusp_to, m, n, c0) -> mpc:
    """Kloosterman sum attached to a cusp pair of Gamma_0(level), nebentypus psi.

    c0 is the integer part of the modulus as produced by cusp_moduli.
    """
    kf, _ = _parse_cusp(cusp_from)
    kt, r = _parse_cusp(cusp_to)
    if kf != "infinity":
        raise ValueError("unsupported cusp pair: first cusp must be infinity")
    if psi.modulus != level:
        psi = psi.induce(level)
    if kt == "infinity":
        if c0 % level:
            raise ValueError("modulus must be divisible by the level")
        return kloosterman_twisted(psi, m, n, c0)
    s = level // r
    if r * s != level or gcd(r, s) != 1:
        raise ValueError("atkin-lehner cusp needs r || level")
    if c0 % r or gcd(c0, s) != 1:
        raise ValueError("inadmissible modulus for this cusp pair")
    cond = psi.conductor()
    if s % cond:
        raise ValueError("cusp is singular for this nebentypus")
    # Atkin-Lehner cusp 1/r (r = 1 is the zero cusp), via explicit matrices
    sbar = inv_mod(s % r, r) if r > 1 else 0
    shift = (s * sbar - 1) // r
    total = mpc(0)
    cs = c0 * s
    psibar = psi.conjugate()
    ps = PhaseSum()
    for x in range(1, c0 + 1):
        if gcd(x, c0) != 1:
            continue
        xinv = inv_mod(x, c0) if c0 > 1 else 0
        w = crt([xinv, 0], [c0, s]) if c0 > 1 else 0
        d0 = w - c0 * shift
        a = psibar.angle(d0)
        if a is None:
            continue
        ps.add(a + Fraction(x * m, c0) + Fraction(w * n, cs))
    return ps.evaluate()


def cusp_kloosterman_zero_closed(level, psi, m, n, c0) -> mpc:
    """Closed form at the zero cusp: psibar(c0) S(m, n levelbar; c0).

    levelbar is the inverse of the level mod c0.  Independent of the matrix
    enumeration in cusp_kloosterman, so the two serve as cross-checks.
    """
    if gcd(c0, level) != 1:
        raise ValueError("zero-cusp modulus must be coprime to the level")
    if psi.modulus != level:
        psi = psi.induce(level)
    if c0 == 1:
        return mpc(1)
    lbar = inv_mod(level % c0, c0)
    return psi.conjugate()(c0) * kloosterman(m, n * lbar, c0)


def kloosterman_char_route(a: int, n: int, sign: int, r: int, ell: int) -> mpc:
    """S(a, sign n ellbar^2; r) through characters mod r.

    With n = n0 n' (n0 | r^inf, gcd(n', r) = 1) and gcd(a ell, r) = 1:
    (1/phi(r)) sum over psi mod r of psi(ell)^2 psibar(sign a n')
    tau(psi) tau(psi, n0).
    """
    from .characters import character_group

    if gcd(a, r) != 1 or gcd(ell, r) != 1:
        raise ValueError("needs gcd(a, r) = gcd(ell, r) = 1")
    n0, n1 = smooth_split(n, r)
    total = mpc(0)
    for psi in character_group(r):
        v = psi(ell * ell) * psi.conjugate()(sign * a * n1)
        if v == 0:
            continue
        total += v * psi.gauss_sum() * psi.gauss_sum_twisted(n0)
    return total / euler_phi(r)


# === averaged identities over a residue class ===


def twisted_average_lhs(chi, m: int, n: int, h: dict) -> mpc:
    """sum over (c, q) = 1 of chi(c) S(m, n; c) h(c), h finitely supported."""
    q = chi.modulus
    total = mpc(0)
    for c in sorted(h):
        if gcd(c, q) == 1:
            total += chi(c) * kloosterman(m, n, c) * h[c]
    return total


def twisted_average_rhs(chi, m: int, n: int, h: dict) -> mpc:
    """The same average unfolded to the primitive part chi1 mod q1:

    (chi1(m)/tau(chi1)) sum over d | q of mu(d) times the sum over c with
    d q1 | c of S_chi1(m, n q1^2; c) h(c / q1).

    Requires gcd(m, q1) = 1.
    """
    chi1 = chi.primitive_part()
    q1 = chi1.modulus
    q = chi.modulus
    if gcd(m, q1) != 1:
        raise ValueError("identity needs gcd(m, conductor) = 1")
    total = mpc(0)
    for d in divisors(q):
        mu = moebius(d)
        if mu == 0:
            continue
        inner = mpc(0)
        for j in sorted(h):
            if j % d == 0:
                inner += kloosterman_twisted(chi1, m, n * q1 * q1, j * q1) * h[j]
        total += mu * inner
    return chi1(m) / chi1.gauss_sum() * total


# === switching the modulus family of a weighted Kloosterman sum ===


def moduli_switch_lhs(psi, m: int, bign: int, sign: int, weight, ell_max: int) -> mpc:
    """sum over ell coprime to r of psi(ell)^2 S(m, sign bign rbar^2; ell)
    weight(4 pi sqrt(m bign) / (ell r)) / (ell r), truncated at ell_max."""
    r = psi.modulus
    x0 = 4 * mp.pi * mp.sqrt(m * bign)
    total = mpc(0)
    psi2 = psi * psi
    for ell in range(1, ell_max + 1):
        if gcd(ell, r) != 1:
            continue
        v = psi2(ell)
        rbar2 = inv_mod(r * r % ell, ell) if ell > 1 else 0
        s = kloosterman(m, sign * bign * rbar2, ell)
        total += v * s * weight(x0 / (ell * r)) / (ell * r)
    return total


def moduli_switch_rhs(psi, m: int, bign: int, sign: int, weight, c_max: int) -> mpc:
    """(psi(m)^2 / tau(psi^2)) sum over d | r of mu(d) times the sum over
    c = 0 mod d r of S_{psi^2}(m, sign bign; c) weight(4 pi sqrt(m bign)/c)/c,
    truncated at c_max."""
    r = psi.modulus
    psi2 = psi * psi
    x0 = 4 * mp.pi * mp.sqrt(m * bign)
    total = mpc(0)
    for d in divisors(r):
        mu = moebius(d)
        if mu == 0:
            continue
        step = d * r
        inner = mpc(0)
        for c in range(step, c_max + 1, step):
            s = kloosterman_twisted(psi2, m, sign * bign, c)
            inner += s * weight(x0 / c) / c
        total += mu * inner
    v = psi(m)
    return v * v / psi2.gauss_sum() * total


# === elementary inverse splitting and certified geometric sums ===


def crt_inverse_check(h: int, c: int, ell: int, r: int):
    """Split the inverse of v = h r + c ell modulo ell r into local parts.

    With h hbar = 1 and r rbar = 1 mod ell, c cbar = 1 and ell ellbar = 1
    mod r, the claim is vbar = hbar r rbar^2 + cbar ell ellbar^2 mod ell r.
    Returns (verdict, vbar, recombined side).
    """
    if gcd(ell, r) != 1:
        raise ValueError("needs gcd(ell, r) = 1")
    mod = ell * r
    v = h * r + c * ell
    if gcd(v % mod if mod > 1 else 0, mod) != 1 and mod > 1:
        raise ValueError("needs gcd(h r + c ell, ell r) = 1")
    vbar = inv_mod(v % mod, mod) if mod > 1 else 0
    rhs = 0
    if ell > 1:
        hbar = inv_mod(h % ell, ell)
        rbar = inv_mod(r % ell, ell)
        rhs += hbar * r * rbar * rbar
    if r > 1:
        cbar = inv_mod(c % r, r)
        ellbar = inv_mod(ell % r, r)
        rhs += cbar * ell * ellbar * ellbar
    rhs %= max(mod, 1)
    return vbar == rhs, vbar, rhs


def _geometric_tail_at(kind, X0, scale, mabs, nabs, g, bounds, s_part):
    """Certified bound on the dropped moduli with integer part above X0.

    kind selects the Kloosterman bound: "weil" (twisted complete sums,
    integer moduli), "zero" (closed form at the zero cusp, moduli coprime
    to the level) or "crude" (|S| <= c0 for enumerated Atkin-Lehner data).
    scale is the real modulus divided by the integer part (sqrt of the
    complementary divisor).  Returns None when no envelope applies.
    """
    from .bounds import divisor_series_tail, power_tail

    x_next = 4 * mp.pi * mp.sqrt(mabs * nabs) / ((X0 + 1) * scale)
    best = None
    for cbig, p, x_hi in bounds:
        if x_hi is not None and x_next > x_hi:
            continue
        if cbig == 0:
            return mpf(0)
        if p <= mpf(1) / 2:
            continue
        base = mp.pi * mp.sqrt(mabs * nabs) / scale
        if kind == "weil":
            t = cbig * mp.sqrt(g) * base**p * divisor_series_tail(X0, p + mpf(1) / 2)
        elif kind == "zero":
            t = (
                cbig
                * mp.sqrt(mabs)
                * base**p
                / mp.sqrt(s_part)
                * divisor_series_tail(X0, p + mpf(1) / 2)
            )
        else:
            if p <= 1:
                continue
            t = cbig * base**p / mp.sqrt(s_part) * power_tail(X0, mpf(p))
        if best is None or t < best:
            best = t
    return best


def geometric_sum(
    cusp_from,
    cusp_to,
    psi,
    m: int,
    n: int,
    weight,
    bounds,
    tail_target,
    max_moduli: int = 200000,
):
    """Sum of S_ab(m, n; c)/c weight(4 pi sqrt(m|n|)/c) over the modulus family.

    The level is the modulus of psi; c runs through the real moduli of the
    cusp pair; n may be negative.  bounds is a list of (C, p, x_hi) triples
    asserting |weight(x)| <= C (x/2)^p for 0 < x <= x_hi (x_hi None meaning
    all x); a triple (0, 0, x_lo) declares compact support away from zero.
    The sum stops once the certified tail falls below tail_target.
    Returns (value, tail_bound).
    """
    level = psi.modulus
    kf, _ = _parse_cusp(cusp_from)
    kt, r = _parse_cusp(cusp_to)
    if kf != "infinity":
        raise ValueError("unsupported cusp pair: first cusp must be infinity")
    mabs, nabs = abs(m), abs(n)
    if mabs == 0 or nabs == 0:
        raise ValueError("needs nonzero m and n")
    xf = 4 * mp.pi * mp.sqrt(mabs * nabs)
    total = mpc(0)
    bounds = list(bounds)
    if kt == "infinity":
        kind, scale, s_part = "weil", mpf(1), 1
        g = gcd(mabs, nabs)
        psiL = psi if psi.modulus == level else psi.induce(level)
        step = level
        c0 = 0
        count = 0
        while count < max_moduli:
            c0 += step
            count += 1
            creal = mpf(c0)
            sval = KloostermanTable(c0, psiL).sum(m, n)
            total += sval / creal * weight(xf / creal)
            tail = _geometric_tail_at(kind, c0, scale, mabs, nabs, g, bounds, s_part)
            if tail is not None and tail <= tail_target:
                return total, tail
        raise RuntimeError("tail target unreachable within iteration cap")
    s_part = level // r
    if r * s_part != level or gcd(r, s_part) != 1:
        raise ValueError("atkin-lehner cusp needs r || level")
    scale = mp.sqrt(s_part)
    kind = "zero" if r == 1 else "crude"
    g = gcd(mabs, nabs)
    psibar = psi.conjugate()
    c0 = 0
    count = 0
    while count < max_moduli:
        c0 += r
        if gcd(c0, s_part) != 1:
            continue
        count += 1
        creal = c0 * scale
        if r == 1:
            if c0 == 1:
                sval = mpc(1)
            else:
                lbar = inv_mod(level % c0, c0)
                sval = psibar(c0) * KloostermanTable(c0).sum(m, n * lbar)
        else:
            sval = cusp_kloosterman(level, psi, cusp_from, cusp_to, m, n, c0)
        total += sval / creal * weight(xf / creal)
        tail = _geometric_tail_at(kind, c0, scale, mabs, nabs, g, bounds, s_part)
        if tail is not None and tail <= tail_target:
            return total, tail
    raise RuntimeError("tail target unreachable within iteration cap")
