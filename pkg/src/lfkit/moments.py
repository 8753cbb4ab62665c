"""Fourth-moment assembly for a Dirichlet L-function at a prime modulus.

The underlying object is the weighted moment integral of a product of four
L-values on vertical lines, together with its absolutely convergent
double-series form, its dissection into diagonal and two off-diagonal
wings, and the re-expansion of the off-diagonal wing into a polar term
plus weighted families of Kloosterman sums.  Everything here is finite or
truncated-with-certificate; nothing requires spectral input.  Spectral
summands (Maass, holomorphic, Eisenstein) are consumed as external records
through the plumbing at the bottom of the module.

Layout:
  MomentPoint, Budget, select_point   shift-vector bookkeeping and the
                                      admissible-domain search
  z2_quadrature / z2_double_sum       the moment integral two ways
  diagonal_d4, od_direct, polar_term  dissection pieces
  a_q_function, j_pm_series,
  e_pm_series, prop33_check           the Kloosterman-side identity
  SpectralRecord, EisensteinParams,
  rankin_series, sigma_q/pi_q, ...    spectral and ramified plumbing

Certified tails follow two patterns.  Double sums against the Gaussian
window use an Abel-summation bound with closed Gaussian moments (the
_ik_moments helper).  Kloosterman families use the Weil bound together
with power-law envelopes of the weight function (PsiPair.power_bounds).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from mpmath import mp, mpc, mpf

from .arith import divisors, euler_phi, is_prime, moebius, ramanujan_sum
from .bounds import (
    divisor_log_series_tail,
    divisor_series_tail,
    geometric_tail,
    pad,
    zeta_tail,
)
from .characters import DirichletCharacter, h_factor, primitive_characters
from .expsums import KloostermanTable
from .precision import to_mpc, to_mpf
from .transforms import PsiPair, TestFunction, g_big, g_mellin, phi_minus, phi_plus, xi_transform
from .zetas import dirichlet_l, sigma_power, sigma_table, zeta, zeta_q

__all__ = [
    "Budget",
    "MomentPoint",
    "default_character",
    "select_point",
    "z2_quadrature",
    "z2_double_sum",
    "diagonal_d4",
    "diagonal_series",
    "od_direct",
    "od_ddagger_direct",
    "atkinson_sides",
    "a_q_function",
    "polar_term",
    "j_pm_series",
    "e_pm_series",
    "prop33_check",
    "IdentityReport",
    "SpectralRecord",
    "EisensteinParams",
    "read_spectral_records",
    "write_spectral_records",
    "spectral_terms_from_data",
    "eisenstein_eigenvalue",
    "eisenstein_hecke_sides",
    "eisenstein_factor",
    "rankin_series",
    "sigma_q_function",
    "pi_q_function",
    "degenerate_multiplicative_functions",
    "ramified_geometric_sides",
    "q_smooth_switch_sides",
]


# === points and budgets ===


@dataclass
class Budget:
    """Truncation targets shared by the series evaluators at one point."""

    eps: mpf = mpf("1e-9")
    n_cap: int = 4000
    c_cap: int = 20000

    def __post_init__(self):
        self.eps = mpf(self.eps)


class MomentPoint:
    """A shift vector s, a primitive character and a Gaussian window.

    The modulus must be prime (or 1 for the classical degenerate case).
    The same point object is threaded through every evaluator so derived
    data (the weight-function pair, Kloosterman family values) is built
    once and shared.
    """

    def __init__(self, s, chi: DirichletCharacter, tf: TestFunction, budget: Budget | None = None):
        self.s = tuple(to_mpc(x) for x in s)
        if len(self.s) != 4:
            raise ValueError("need four shifts")
        q = chi.modulus
        if q != 1 and not is_prime(q):
            raise ValueError("modulus must be prime or 1")
        if not chi.is_primitive:
            raise ValueError("character must be primitive")
        self.chi = chi
        self.tf = tf
        self.budget = budget or Budget()
        self._cache = {}

    @property
    def q(self) -> int:
        return self.chi.modulus

    @property
    def sum_s(self) -> mpc:
        return self.s[0] + self.s[1] + self.s[2] + self.s[3]

    def mirror(self) -> "MomentPoint":
        """The conjugate-reflected point (s3bar, s4bar, s1bar, s2bar)."""
        s1, s2, s3, s4 = self.s
        return MomentPoint(
            (mp.conj(s3), mp.conj(s4), mp.conj(s1), mp.conj(s2)),
            self.chi,
            self.tf,
            self.budget,
        )

    def psi_pair(self) -> PsiPair:
        key = "psip"
        if key not in self._cache:
            self._cache[key] = PsiPair(self.s, self.tf)
        return self._cache[key]


def default_character(q: int) -> DirichletCharacter:
    """Deterministic primitive nonquadratic character mod prime q >= 5."""
    cands = [c for c in primitive_characters(q) if c.order() > 2]
    if not cands:
        raise ValueError("no primitive nonquadratic character at this modulus")
    cands.sort(key=lambda c: (c.order(), c.exponents))
    return cands[0]


_R4_DELTA = mpf("0.1")


def _domain_margins(sig, B, delta, conv_margin):
    """Margins of a real shift vector against every constraint in play.

    Positive everywhere means admissible: the base region, the search
    region with parameter delta, the box-and-sum region at size B, plus
    the absolute-convergence margins the Kloosterman-side series need.
    """
    s1, s2, s3, s4 = sig
    tot = s1 + s2 + s3 + s4
    out = [
        s1 - 1, s2 - 1, s3 - 1, s4 - 1,
        (s1 + s3) - (2 + 2 * delta),
        s2 - (s1 + 1),
        delta - abs(s3 - s4),
        B - abs(s1), B - abs(s2), B - abs(s3), B - abs(s4),
        B / 3 - (s1 + s3),
        B / 3 - (s1 + s4),
        tot - 3 * B / 2,
        (s2 + s4 - s1 - s3) - (1 + 2 * abs(s3 - s4)) - conv_margin,
        (tot - 3) - conv_margin,
    ]
    return out


def select_point(
    q: int,
    B=mpf(18),
    tf: TestFunction | None = None,
    delta=_R4_DELTA,
    conv_margin=mpf("0.25"),
    budget: Budget | None = None,
) -> MomentPoint:
    """Search the admissible overlap region for a well-centered shift vector.

    Scans a deterministic grid of real shift vectors, scores each by its
    smallest constraint margin, and returns the best as a MomentPoint.
    Raises when the region is empty at the requested B.
    """
    B = mpf(B)
    best = None
    pick = None
    offs = mpf("0.02")
    for a1 in (mpf("1.15"), mpf("1.25"), mpf("1.4"), mpf("1.6")):
        for a3 in (mpf("3.9"), mpf("4.3"), mpf("4.7"), mpf("5.1")):
            a4 = a3 + offs
            for a2 in (B - mpf("2.2"), B - mpf("1.4"), B - mpf("0.8")):
                sig = (a1, a2, a3, a4)
                m = min(_domain_margins(sig, B, delta, conv_margin))
                if best is None or m > best:
                    best = m
                    pick = sig
    if best is None or best <= 0:
        raise ValueError("no admissible shift vector at this box size")
    chi = default_character(q)
    return MomentPoint(pick, chi, tf or TestFunction(mpf(0), mpf(6)), budget)


# === the moment integral, two ways ===


def z2_quadrature(p: MomentPoint):
    """The weighted fourth-moment integral by direct quadrature.

    Returns (value, error bound).  The error combines the quadrature
    estimate with the Gaussian mass beyond the truncated window; outside
    the product-of-zeta-bounds region the window term is an estimate from
    sampled integrand size rather than a certificate.
    """
    s1, s2, s3, s4 = p.s
    chi = p.chi
    chib = chi.conjugate()
    tfn = p.tf
    T, H = tfn.T, tfn.H

    def f(t):
        it = mpc(0, 1) * t
        return (
            dirichlet_l(s1 + it, chi)
            * dirichlet_l(s2 + it, chi)
            * dirichlet_l(s3 - it, chib)
            * dirichlet_l(s4 - it, chib)
            * tfn.g(t)
        )

    R = H * mp.sqrt(mp.prec * mp.log(2) + 25)
    val, quad_err = mp.quad(f, [T - R, T - 2 * H, T, T + 2 * H, T + R], error=True)
    gtail = mp.sqrt(H) * mp.erfc(R / H)
    sig = [s1.real, s2.real, s3.real, s4.real]
    if min(sig) > 1:
        big = zeta(sig[0]).real * zeta(sig[1]).real * zeta(sig[2]).real * zeta(sig[3]).real
    else:
        samples = [abs(f(T + R)), abs(f(T - R)), abs(f(T + R / 2)), abs(f(T - R / 2))]
        big = 4 * max(samples) / tfn.g(T + R).real
    return val, pad(quad_err + gtail * big)


def _side_profile(sa, sb):
    """Bound data for |sigma_{sa-sb}(k) k^{-sa}| <= const tau(k)^t k^{-a}.

    Picks between the divisor-count majorant and the convergent-zeta
    constant, whichever is available and smaller in practice.
    """
    ra, rb = sa.real, sb.real
    if ra > rb:
        return (1, mpf(1), rb)
    gapz = rb - ra
    if gapz > mpf("1.1"):
        return (0, zeta(gapz).real, ra)
    return (1, mpf(1), ra)


def z2_double_sum(p: MomentPoint):
    """The moment as its absolutely convergent character double series.

    Valid for all four real parts above 1.  Returns (value, certified
    tail), the tail from a two-sided exponential-linearization bound on
    the Gaussian window.
    """
    s1, s2, s3, s4 = p.s
    if min(x.real for x in p.s) <= 1:
        raise ValueError("double series needs all real parts above 1")
    q = p.q
    tfn = p.tf
    H = tfn.H
    tm, cm, am = _side_profile(s1, s2)
    tn, cn, an = _side_profile(s3, s4)
    eps = p.budget.eps

    def tail_at(N):
        best = None
        for lam_frac in (mpf("0.15"), mpf("0.3"), mpf("0.5"), mpf("0.7"), mpf("0.85")):
            t = None
            lam_m = (an - 1 - mpf("0.05")) * lam_frac
            lam_n = (am - 1 - mpf("0.05")) * lam_frac
            if lam_m > 0:
                zn = cn * (zeta(an - lam_m).real ** (2 if tn else 1))
                tm_part = divisor_series_tail(N, am + lam_m) if tm else cm * zeta_tail(N, am + lam_m)
                t = mp.exp(lam_m**2 / H**2) * zn * (tm_part if tm else tm_part)
            if lam_n > 0:
                zm = cm * (zeta(am - lam_n).real ** (2 if tm else 1))
                tn_part = divisor_series_tail(N, an + lam_n) if tn else cn * zeta_tail(N, an + lam_n)
                t2 = mp.exp(lam_n**2 / H**2) * zm * tn_part
                t = t2 if t is None else t + t2
            if t is not None and (best is None or t < best):
                best = t
        return mp.sqrt(H) * best if best is not None else mpf("inf")

    N = 64
    while tail_at(N) > eps and N < p.budget.n_cap:
        N = min(2 * N, p.budget.n_cap)
    cert = tail_at(N)

    tab = p.chi.value_table() if q > 1 else None
    sig_m = sigma_table(N, s1 - s2)
    sig_n = sigma_table(N, s3 - s4)
    lns = [mpf(0)] * (N + 1)
    for k in range(1, N + 1):
        lns[k] = mp.log(k)
    powm = [mpc(0)] * (N + 1)
    pown = [mpc(0)] * (N + 1)
    for k in range(1, N + 1):
        if q == 1 or k % q:
            powm[k] = mpf(k) ** (-s1)
            pown[k] = mpf(k) ** (-s3)
    sqh = mp.sqrt(H)
    T = tfn.T
    quarter = H * H / 4
    # drop pairs whose window factor cannot reach eps / N^2
    u_cut = 2 * mp.sqrt(mp.log(sqh * N * N / eps + 10)) / H
    total = mpc(0)
    for m in range(1, N + 1):
        if q > 1 and m % q == 0:
            continue
        fm = tab[m % q] * sig_m[m] * powm[m] if q > 1 else sig_m[m] * powm[m]
        lo = 1
        hi = N
        for n in range(lo, hi + 1):
            if q > 1 and n % q == 0:
                continue
            u = lns[m] - lns[n]
            if abs(u) > u_cut:
                continue
            w = sqh * mp.exp(-quarter * u * u)
            if T:
                w = w * mp.exp(mpc(0, -T * u))
            fn = mp.conj(tab[n % q]) * sig_n[n] * pown[n] if q > 1 else sig_n[n] * pown[n]
            total += fm * fn * w
    cert = cert + eps  # pruning allowance
    return total, pad(cert)


# === diagonal and off-diagonal dissection ===


def diagonal_d4(p: MomentPoint) -> mpc:
    """Closed form of the diagonal: ghat(0) times the zeta-quotient block."""
    s1, s2, s3, s4 = p.s
    q = p.q
    return p.tf.ghat(0) * (
        zeta_q(s1 + s3, q)
        * zeta_q(s1 + s4, q)
        * zeta_q(s2 + s3, q)
        * zeta_q(s2 + s4, q)
        / zeta_q(p.sum_s, q)
    )


def diagonal_series(p: MomentPoint, N: int):
    """Truncated coprime diagonal series with certified tail, an oracle
    for diagonal_d4."""
    s1, s2, s3, s4 = p.s
    q = p.q
    sig_m = sigma_table(N, s1 - s2)
    sig_n = sigma_table(N, s3 - s4)
    total = mpc(0)
    for k in range(1, N + 1):
        if q == 1 or k % q:
            total += sig_m[k] * sig_n[k] * mpf(k) ** (-s1 - s3)
    _, cmm, amm = _side_profile(s1, s2)
    _, cnn, ann = _side_profile(s3, s4)
    tail = cmm * cnn * divisor_series_tail(N, amm + ann, 2)
    return p.tf.ghat(0) * total, pad(abs(p.tf.ghat(0)) * tail)


def _ik_moments(D, E, U):
    """I_k = int_U^inf u^k exp(D u - E u^2) du for k = 0, 1, 2; E > 0."""
    D, E, U = mpf(D), mpf(E), mpf(U)
    if U > 0:
        base = mp.exp(D * U - E * U * U)
        j0, j1, j2 = _ik_moments(D - 2 * E * U, E, mpf(0))
        return (
            base * j0,
            base * (j1 + U * j0),
            base * (j2 + 2 * U * j1 + U * U * j0),
        )
    se = mp.sqrt(E)
    i0 = mp.sqrt(mp.pi) / (2 * se) * mp.exp(D * D / (4 * E)) * mp.erfc(-D / (2 * se))
    i1 = (1 + D * i0) / (2 * E)
    i2 = (i0 + D * i1) / (2 * E)
    return i0, i1, i2


def _inner_gauss_bound(n, a_in, with_tau, H, U):
    """Abel bound on sum over m > n e^U of tau?(m) m^-a_in gauss(ln(m/n)).

    gauss(u) = exp(-(H^2/4) u^2).  Uses T(x) <= x(log x + 1) for the
    divisor sums (T(x) <= x without tau) and returns the closed bound
    n^{1-a_in} (A + B log n) as the pair (A, B).
    """
    D = 1 - a_in
    E = H * H / 4
    i0, i1, i2 = _ik_moments(D, E, U)
    half = H * H / 2
    if with_tau:
        # integrand (log n + u + 1)(a_in + (H^2/2) u)
        A = a_in * (i0 + i1) + half * (i1 + i2)
        B = a_in * i0 + half * i1
    else:
        A = a_in * i0 + half * i1
        B = mpf(0)
    return A, B


def _od_half(p: MomentPoint, lower: bool):
    """One off-diagonal orientation of the double series, with certificate.

    lower False sums over m > n (first-index heavy), lower True over
    m < n.  Rows run over the smaller index; each row keeps a ribbon of
    larger indices wide enough for the Gaussian window, and both the
    dropped ribbon mass and the dropped rows are certified.
    """
    s1, s2, s3, s4 = p.s
    q = p.q
    tfn = p.tf
    H = tfn.H
    eps = p.budget.eps
    if not lower:
        row_s, row_sig = s3, s3 - s4          # rows n, inner m
        in_s = s1
        t_row, c_row, a_row = _side_profile(s3, s4)
        t_in, c_in, a_in = _side_profile(s1, s2)
    else:
        row_s, row_sig = s1, s1 - s2          # rows m, inner n
        in_s = s3
        t_row, c_row, a_row = _side_profile(s1, s2)
        t_in, c_in, a_in = _side_profile(s3, s4)
    sqh = mp.sqrt(H)

    def rows_tail(N):
        A, B = _inner_gauss_bound(N, a_in, bool(t_in), H, mpf(0))
        sT = a_in + a_row - 1
        if sT <= mpf("1.05"):
            return mpf("inf")
        return (
            sqh
            * c_in
            * c_row
            * (A * divisor_series_tail(N, sT) + B * divisor_log_series_tail(N, sT))
        )

    N = 48
    while rows_tail(N) > eps / 2 and N < p.budget.n_cap:
        N = min(int(N * 3 // 2) + 8, p.budget.n_cap)
    cert = rows_tail(N)

    # per-row ribbon width: U so the summed ribbon remainders stay small
    row_abs = [mpf(0)] * (N + 1)
    sig_row = sigma_table(N, row_sig)
    for k in range(1, N + 1):
        if q == 1 or k % q:
            row_abs[k] = abs(sig_row[k]) * mpf(k) ** (-row_s.real)

    def ribbon_total(U):
        tot = mpf(0)
        for k in range(1, N + 1):
            if row_abs[k] == 0:
                continue
            A, B = _inner_gauss_bound(k, a_in, bool(t_in), H, U)
            tot += row_abs[k] * mpf(k) ** (1 - a_in) * (A + B * mp.log(k))
        return sqh * c_in * tot

    U = mpf(2) / H
    while ribbon_total(U) > eps / 2 and U < 40:
        U += mpf(1) / H
    cert += ribbon_total(U)

    tab = p.chi.value_table() if q > 1 else None
    total = mpc(0)
    growth = mp.exp(U)
    if not lower:
        for n in range(1, N + 1):
            if row_abs[n] == 0:
                continue
            wn = (mp.conj(tab[n % q]) if q > 1 else 1) * sig_row[n] * mpf(n) ** (-s1 - s3)
            m_hi = int(mp.floor(n * growth))
            for m in range(n + 1, m_hi + 1):
                if q > 1 and m % q == 0:
                    continue
                h = m - n
                y = mpf(h) / n
                wm = (tab[m % q] if q > 1 else 1) * sigma_power(m, s1 - s2)
                total += wm * wn * g_big(y, s1, tfn)
    else:
        for m in range(1, N + 1):
            if row_abs[m] == 0:
                continue
            wm = (tab[m % q] if q > 1 else 1) * sig_row[m] * mpf(m) ** (-s1 - s3)
            n_hi = int(mp.floor(m * growth))
            for n in range(m + 1, n_hi + 1):
                if q > 1 and n % q == 0:
                    continue
                y = mpf(n - m) / m
                wn = (mp.conj(tab[n % q]) if q > 1 else 1) * sigma_power(n, s3 - s4)
                xi = -mp.log(1 + y) / (2 * mp.pi)
                total += wm * wn * (1 + y) ** (-s3) * tfn.ghat(xi)
    return total, pad(cert)


def od_direct(p: MomentPoint, part: str = "dagger"):
    """One off-diagonal wing of the dissection, with certified tail.

    The dagger wing is the direct shifted-convolution sum; the ddagger
    wing is produced from it by the conjugate-reflection identity.
    """
    if part == "dagger":
        return _od_half(p, lower=False)
    if part == "ddagger":
        v, c = _od_half(p.mirror(), lower=False)
        return mp.conj(v), c
    raise ValueError("part must be dagger or ddagger")


def od_ddagger_direct(p: MomentPoint):
    """The ddagger wing summed in its own orientation, an independent
    cross-check of the reflection identity."""
    return _od_half(p, lower=True)


def atkinson_sides(p: MomentPoint):
    """Dissection check data: the double series against diagonal plus wings.

    Returns (lhs, rhs, combined certificate).
    """
    lhs, e0 = z2_double_sum(p)
    d = diagonal_d4(p)
    w1, e1 = od_direct(p, "dagger")
    w2, e2 = od_direct(p, "ddagger")
    return lhs, d + w1 + w2, pad(e0 + e1 + e2)


# === polar term ===


def a_q_function(q: int, s) -> mpc:
    """The finite arithmetical factor in front of each polar piece."""
    s1, s2, s3, s4 = (to_mpc(x) for x in s)
    w = s1 - s2 + s3 - s4 - 1
    tot = s1 + s2 + s3 + s4
    total = mpc(0)
    for c in divisors(q):
        mu_c = moebius(c)
        if mu_c == 0:
            continue
        inner = mpc(0)
        for d in divisors(q // c):
            mu2 = moebius(q // (c * d))
            if mu2 == 0:
                continue
            inner += mu2 * mpf(d) ** (2 - s1 - s3) * sigma_power(d, w)
        total += mu_c * mpf(c) ** (2 - tot) * inner
    return total / q


def _polar_once(p: MomentPoint) -> mpc:
    s1, s2, s3, s4 = p.s
    q = p.q
    tfn = p.tf
    first = (
        a_q_function(q, (s1, s2, s3, s4))
        * g_mellin(s1 + s3 - 1, s1, tfn)
        * zeta_q(1 - s1 + s2, q)
        * zeta_q(1 - s3 + s4, q)
        * zeta(s2 + s4)
        * zeta(s1 + s3 - 1)
        / zeta_q(s2 + s4 - s1 - s3 + 2, q)
    )
    second = (
        a_q_function(q, (s1, s2, s4, s3))
        * g_mellin(s1 + s4 - 1, s1, tfn)
        * zeta_q(1 - s1 + s2, q)
        * zeta_q(1 + s3 - s4, q)
        * zeta(s2 + s3)
        * zeta(s1 + s4 - 1)
        / zeta_q(s2 + s3 - s1 - s4 + 2, q)
    )
    return first + second


def polar_term(p: MomentPoint) -> mpc:
    """The polar main term of the off-diagonal re-expansion.

    The two pieces have poles colliding at s3 = s4; near that diagonal the
    value is recovered by averaging over a small symmetric offset, which
    cancels the odd part of the Laurent expansion.
    """
    s1, s2, s3, s4 = p.s
    if abs(s3 - s4) > mpf(2) ** (-12):
        return _polar_once(p)
    eps = mpf(2) ** (-(mp.prec // 3))
    up = MomentPoint((s1, s2, s3, s4 + eps), p.chi, p.tf, p.budget)
    dn = MomentPoint((s1, s2, s3, s4 - eps), p.chi, p.tf, p.budget)
    return (_polar_once(up) + _polar_once(dn)) / 2


# === Kloosterman families: shared truncation helpers ===


def _envelope_cert_tail(pb, Y, c_from):
    """Tail of sum_{c > c_from} tau(c) c^{-1/2} env(Y/c) for the envelope
    min over (C, p) pairs of C (Y/c)^p, valid where Y/c <= 1."""
    best = None
    for cbig, pw in pb:
        if pw <= mpf("0.6"):
            continue
        t = cbig * Y**pw * divisor_series_tail(c_from, pw + mpf(1) / 2)
        if best is None or t < best:
            best = t
    return best if best is not None else mpf("inf")


def _weights_mn(p: MomentPoint):
    """Exponents of the Kloosterman-side double sum at this point."""
    s1, s2, s3, s4 = p.s
    alpha = (1 - p.sum_s) / 2
    beta = (s1 - s2 + s3 - s4 - 1) / 2
    w = s4 - s3
    return alpha, beta, w


def _mn_caps(p: MomentPoint, pb, b2, scale, gexp, eps_alloc):
    """Index caps (M, N) plus the certified dropped-pair mass.

    Closes the sum over pairs with m > M or n > N of the full-family
    Weil-times-envelope majorant in zeta form.  Over the whole family,
    with Y = pi sqrt(mn)/scale,

      sum_c tau(c) c^{-1/2} |W| <= C_min Y^{3/2} zeta(2)^2 + 2 b2 Y,

    the first piece because every envelope power is >= 3/2 where the
    envelope applies, the second from the big-argument quadratic majorant
    and log Y + 1 <= 2 sqrt(Y).  Multiplying by the gcd^{1/2} power
    (mn)^{gexp} and the m, n weights leaves products of divisor-series
    tails.  gexp is (1/4, 1/4) when the gcd can reach min(m, n), and
    (1/2, 0) when it divides m alone.
    """
    alpha, beta, w = _weights_mn(p)
    gm, gn = gexp
    ra = alpha.real + gm
    rb = beta.real + max(mpf(0), w.real) + gn
    cmin_env = min(c for c, _ in pb)
    base = 2 * mp.pi / scale
    k1 = cmin_env * base ** mpf("1.5") * zeta(2).real ** 2 / scale
    k2 = 2 * b2 * base / scale
    # exponent pairs: (3/4, 3/4) from Y^{3/2}, (1/2, 1/2) from Y
    need = (-ra - mpf("1.75"), -rb - mpf("1.75"))
    if min(need) <= mpf("0.05"):
        raise ValueError("pair weights decay too slowly to certify truncation")

    def drop_m(M):
        return k1 * divisor_series_tail(M, -ra - mpf("0.75")) * zeta(
            -rb - mpf("0.75")
        ).real ** 2 + k2 * divisor_series_tail(M, -ra - mpf("0.5")) * zeta(
            -rb - mpf("0.5")
        ).real ** 2

    def drop_n(N):
        return k1 * zeta(-ra - mpf("0.75")).real ** 2 * divisor_series_tail(
            N, -rb - mpf("0.75")
        ) + k2 * zeta(-ra - mpf("0.5")).real ** 2 * divisor_series_tail(
            N, -rb - mpf("0.5")
        )

    M = 2
    while drop_m(M) > eps_alloc / 2 and M < 4096:
        M += 1 + M // 6
    N = 2
    while drop_n(N) > eps_alloc / 2 and N < 65536:
        N += 1 + N // 6
    return M, N, pad(drop_m(M) + drop_n(N))


def _sign_max_bounds(psip: PsiPair):
    """Envelopes valid for both weight functions at once."""
    pp = psip.power_bounds(1)
    pm = psip.power_bounds(-1)
    return [(max(a[0], b[0]), a[1]) for a, b in zip(pp, pm)]


def _ensure_big(psip: PsiPair, x_need):
    """Grid-validate the big-argument majorant out to at least x_need."""
    have = getattr(psip, "_cal_xmax", None)
    if have is None or have < x_need:
        psip.calibrate_big(x_need * mpf("1.1"))
        psip._cal_xmax = x_need * mpf("1.1")
    return psip.big_bound


class _PairSweep:
    """Adaptive evaluation of one Kloosterman family over an index grid.

    Holds running partial sums O[(m, n)][sign] for every kept pair and
    retires a pair once the Weil-envelope tail of its remaining moduli
    drops under the pair's share of the error budget.  Negligible pairs
    are retired up front by the closed whole-family bound, so only the
    few heavy pairs ever touch exponential sums.  One sweep serves both
    signs: the two signed sums and the two weight functions are read off
    the same modulus pass.
    """

    def __init__(self, pairs, psip: PsiPair, pb, scale, eps_total):
        # pairs: list of (m, n, wabs, gbound)
        self.psip = psip
        self.pb = pb
        self.scale = mpf(scale)
        self.values = {}
        self.active = []
        self.cert = mpf(0)
        self.evals = {}
        cmin_env = min(c for c, _ in pb)
        z2 = zeta(2).real ** 2
        b2 = psip.big_bound
        wsum = sum(w for _, _, w, _ in pairs) + mpf("1e-30")
        P = len(pairs)
        for m, n, wabs, gb in pairs:
            self.values[(m, n)] = [mpc(0), mpc(0)]
            share = max(eps_total / (2 * wsum), eps_total / (2 * P * wabs)) if wabs > 0 else mpf("inf")
            Y = 2 * mp.pi * mp.sqrt(mpf(m * n)) / self.scale
            full = mp.sqrt(gb) / self.scale * (cmin_env * Y ** mpf("1.5") * z2 + 2 * b2 * Y)
            if full <= share:
                self.cert += wabs * full
                continue
            self.active.append(
                {
                    "m": m,
                    "n": n,
                    "wabs": wabs,
                    "g": mp.sqrt(gb),
                    "Y": Y,
                    "tgt": share,
                }
            )

    def _tail(self, st, c_next):
        if c_next < st["Y"]:
            return None
        best = None
        for cbig, pw in self.pb:
            t = cbig * st["Y"] ** pw * divisor_series_tail(c_next, pw + mpf(1) / 2)
            if best is None or t < best:
                best = t
        return st["g"] / self.scale * best

    def step(self, c, pair_sums):
        """Advance every active pair by the modulus c.

        pair_sums(m, n) must return the two exponential sums attached to
        (m, n) and (m, -n) at this modulus.  Returns False once all pairs
        have retired.
        """
        still = []
        creal = mpf(c) * self.scale
        for st in self.active:
            m, n = st["m"], st["n"]
            x = 4 * mp.pi * mp.sqrt(mpf(m * n)) / creal
            if x in self.evals:
                vp, vm = self.evals[x]
            else:
                vp, vm = self.psip.eval_pair(x)
                self.evals[x] = (vp, vm)
            sp, sm = pair_sums(m, n)
            acc = self.values[(m, n)]
            acc[0] += sp * vp / creal
            acc[1] += sm * vm / creal
            t = self._tail(st, c + 1)
            if t is not None and t <= st["tgt"]:
                self.cert += st["wabs"] * t
            else:
                still.append(st)
        self.active = still
        return bool(self.active)


def _caps_calibrated(p, psip, pb, scale, gexp, alloc, c_real_min):
    """Index caps with the big-argument majorant validated out to the
    largest argument the capped grid can produce."""
    b2 = _ensure_big(psip, 4 * mp.pi * 40 / c_real_min)
    while True:
        M, N, drop = _mn_caps(p, pb, b2, scale, gexp, alloc)
        need = 4 * mp.pi * mp.sqrt(mpf(M * N)) / c_real_min
        if need <= getattr(psip, "_cal_xmax"):
            return M, N, drop, psip.big_bound
        b2 = _ensure_big(psip, need)


def _j_both(p: MomentPoint, h_variant: str):
    """Both signed Kloosterman-family wings attached to nonquadratic
    auxiliary characters, with certified errors; one sweep per family."""
    q = p.q
    s1, s2, s3, s4 = p.s
    psis = [c for c in primitive_characters(q) if c.order() > 2] if q > 1 else []
    if not psis:
        z = (mpc(0), mpf(0))
        return {1: z, -1: z}
    chib = p.chi.conjugate()
    alpha, beta, w = _weights_mn(p)
    pref = (
        2
        * zeta_q(1 - s1 + s2, q)
        / (chib.gauss_sum() * euler_phi(q) * q)
        * (2 * mp.pi / q) ** (s1 - s2 - 1)
    )

    def hfac(psi, sign):
        if h_variant == "conj":
            return h_factor(p.chi, psi, sign)
        return psi(-sign) * psi.gauss_sum() * (chib * psi).gauss_sum() * psi.jacobi_with(psi)

    groups = {}
    for psi in psis:
        psi2 = psi * psi
        groups.setdefault(psi2.label(), (psi2, []))[1].append(psi)
    habs = max(sum(abs(hfac(psi, sg)) for psi in psis) for sg in (1, -1))
    psip = p.psi_pair()
    pb = _sign_max_bounds(psip)
    eps_fam = p.budget.eps / (2 * abs(pref) * habs * len(groups))
    M, N, drop, b2 = _caps_calibrated(
        p, psip, pb, mpf(1), (mpf("0.25"), mpf("0.25")), eps_fam / 2, mpf(q)
    )

    sig_n = sigma_table(N, s4 - s3)
    ra, rb = alpha.real, beta.real
    pairs = []
    for m in range(1, M + 1):
        if m % q == 0:
            continue
        ma = mpf(m) ** ra
        for n in range(1, N + 1):
            if n % q == 0:
                continue
            pairs.append((m, n, ma * abs(sig_n[n]) * mpf(n) ** rb, gcd(m, n)))

    out = {1: [mpc(0), mpf(0)], -1: [mpc(0), mpf(0)]}
    for label, (psi2, members) in groups.items():
        sweep = _PairSweep(pairs, psip, pb, mpf(1), eps_fam / 2)
        ell = 0
        while sweep.active:
            ell += 1
            if ell % q == 0:
                continue
            c = q * ell
            if c > p.budget.c_cap:
                raise RuntimeError("family truncation unreachable within modulus cap")
            table = KloostermanTable(c, psi2)
            sweep.step(c, table.sum_pair)
        fam_cert = sweep.cert + drop
        for psi in members:
            inner = [mpc(0), mpc(0)]
            for m, n, _, _ in pairs:
                wgt = psi(m) * mp.conj(psi(n)) * mpf(m) ** alpha * sig_n[n] * mpf(n) ** beta
                acc = sweep.values[(m, n)]
                inner[0] += wgt * acc[0]
                inner[1] += wgt * acc[1]
            for sign, idx in ((1, 0), (-1, 1)):
                out[sign][0] += pref * hfac(psi, sign) * inner[idx]
                out[sign][1] += abs(pref) * abs(hfac(psi, sign)) * fam_cert
    return {sg: (out[sg][0], pad(out[sg][1])) for sg in (1, -1)}


def j_pm_series(p: MomentPoint, sign: int, truncation: Budget | None = None, h_variant: str = "conj"):
    """One signed nonquadratic-character wing; (value, certified error).

    Empty whenever the modulus admits no primitive character of order
    above two.  h_variant selects between the two Gauss-sum conventions
    for the character factor; "conj" follows the finite-average identity
    and is adjudicated against the dissection by prop33_check.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if truncation is not None:
        p = MomentPoint(p.s, p.chi, p.tf, truncation)
    key = ("j_both", h_variant)
    if key not in p._cache:
        p._cache[key] = _j_both(p, h_variant)
    return p._cache[key][sign]


def _e_both(p: MomentPoint):
    """Both signed wings attached to principal and quadratic auxiliary
    characters (the degenerate branch of the re-expansion)."""
    q = p.q
    if q < 5 or not is_prime(q):
        raise ValueError("degenerate wing needs a prime modulus at least 5")
    if p.chi.order() <= 2:
        raise ValueError("degenerate wing needs a nonquadratic character")
    from .arith import inv_mod
    from .characters import principal_character, quadratic_character

    s1, s2, s3, s4 = p.s
    chib = p.chi.conjugate()
    alpha, beta, w = _weights_mn(p)
    ra, rb = alpha.real, beta.real
    tau_chib = chib.gauss_sum()
    pref = 2 * (2 * mp.pi) ** (s1 - s2 - 1) / (tau_chib * q)
    psip = p.psi_pair()
    pb = _sign_max_bounds(psip)
    eps_half = p.budget.eps / 2
    out = {1: [mpc(0), mpf(0)], -1: [mpc(0), mpf(0)]}

    # trivial-level branch: untwisted sums over every modulus
    fac1 = zeta(1 - s1 + s2) * tau_chib
    alloc1 = eps_half / (2 * abs(pref) * abs(fac1))
    M1, N1, drop1, b2 = _caps_calibrated(
        p, psip, pb, mpf(1), (mpf("0.25"), mpf("0.25")), alloc1 / 2, mpf(1)
    )
    sig_n1 = sigma_table(N1, s4 - s3)
    pairs1 = []
    for m in range(1, M1 + 1):
        ma = mpf(m) ** ra
        for n in range(1, N1 + 1):
            pairs1.append((m, n, ma * abs(sig_n1[n]) * mpf(n) ** rb, gcd(m, n)))
    sweep1 = _PairSweep(pairs1, psip, pb, mpf(1), alloc1 / 2)
    c = 0
    while sweep1.active:
        c += 1
        if c > p.budget.c_cap:
            raise RuntimeError("family truncation unreachable within modulus cap")
        table = KloostermanTable(c)
        sweep1.step(c, table.sum_pair)
    inner1 = [mpc(0), mpc(0)]
    for m, n, _, _ in pairs1:
        wgt = mpf(m) ** alpha * sig_n1[n] * mpf(n) ** beta
        acc = sweep1.values[(m, n)]
        inner1[0] += wgt * acc[0]
        inner1[1] += wgt * acc[1]
    for sign, idx in ((1, 0), (-1, 1)):
        out[sign][0] += pref * fac1 * inner1[idx]
        out[sign][1] += abs(pref) * abs(fac1) * (sweep1.cert + drop1)

    # full-level branch: principal and quadratic auxiliary characters share
    # one zero-cusp family at level q^2
    psi0 = principal_character(q)
    psiq = quadratic_character(q)
    tau0 = psi0.gauss_sum()
    tq = psiq.gauss_sum()
    facr = mpf(q) ** (1 - s1 + s2) / euler_phi(q) * zeta_q(1 - s1 + s2, q)
    # character factor times every Gauss-sum weight the inner sums emit:
    # the principal branch carries Ramanujan sums directly; the quadratic
    # branch emits tau(psi) from the m side and from the n0 = 1 term
    hf_p = {sg: psi0(-sg) * tau0 * (chib * psi0).gauss_sum() for sg in (1, -1)}
    hf_q = {sg: psiq(-sg) * tq * (chib * psiq).gauss_sum() * tq * tq for sg in (1, -1)}
    habs = max(abs(hf_p[sg]) * q * q + abs(hf_q[sg]) for sg in (1, -1))
    alloc2 = eps_half / (2 * abs(pref) * abs(facr) * habs)
    M2, N2, drop2, b2 = _caps_calibrated(
        p, psip, pb, mpf(q), (mpf("0.5"), mpf(0)), alloc2, mpf(q)
    )
    sig_n2 = sigma_table(N2, s4 - s3)
    phi_q = euler_phi(q)
    pairs2 = []
    for m in range(1, M2 + 1):
        ma = mpf(m) ** ra
        for n in range(1, N2 + 1):
            pairs2.append((m, n, ma * abs(sig_n2[n]) * mpf(n) ** rb, m))
    sweep2 = _PairSweep(pairs2, psip, pb, mpf(q), alloc2 / 2)
    qq = q * q
    c = 0
    while sweep2.active:
        c += 1
        if c % q == 0:
            continue
        if c > p.budget.c_cap:
            raise RuntimeError("family truncation unreachable within modulus cap")
        if c == 1:
            sweep2.step(c, lambda m, n: (mpc(1), mpc(1)))
            continue
        table = KloostermanTable(c)
        tw = inv_mod(qq % c, c)
        sweep2.step(c, lambda m, n: table.sum_pair(m, (n * tw) % c))

    def rq(k):
        return mpf(phi_q) if k % q == 0 else mpf(-1)

    inner_p = [mpc(0), mpc(0)]
    inner_q = [mpc(0), mpc(0)]
    for m, n, _, _ in pairs2:
        acc = sweep2.values[(m, n)]
        base_n = sig_n2[n] * mpf(n) ** beta
        ma = mpf(m) ** alpha
        nn, v = n, 0
        while nn % q == 0:
            nn //= q
            v += 1
        w_p = rq(m) * rq(q**v if v else 1) * ma * base_n
        inner_p[0] += w_p * acc[0]
        inner_p[1] += w_p * acc[1]
        if n % q and m % q:
            w_q = psiq(m) * psiq(n) * ma * base_n
            inner_q[0] += w_q * acc[0]
            inner_q[1] += w_q * acc[1]
    for sign, idx in ((1, 0), (-1, 1)):
        out[sign][0] += pref * facr * (hf_p[sign] * inner_p[idx] + hf_q[sign] * inner_q[idx])
        out[sign][1] += abs(pref) * abs(facr) * habs * (sweep2.cert + drop2)
    return {sg: (out[sg][0], pad(out[sg][1])) for sg in (1, -1)}


def e_pm_series(p: MomentPoint, sign: int, truncation: Budget | None = None):
    """One signed degenerate-character wing; (value, certified error)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if truncation is not None:
        p = MomentPoint(p.s, p.chi, p.tf, truncation)
    if "e_both" not in p._cache:
        p._cache["e_both"] = _e_both(p)
    return p._cache["e_both"][sign]


# === the re-expansion identity ===


@dataclass
class IdentityReport:
    """Outcome of a two-sided identity evaluation with certified errors."""

    statement: str
    lhs: mpc
    rhs: mpc
    lhs_err: mpf
    rhs_err: mpf
    tolerance: mpf
    parts: dict = field(default_factory=dict)

    @property
    def gap(self) -> mpf:
        return abs(self.lhs - self.rhs)

    @property
    def ok(self) -> bool:
        return self.gap <= self.lhs_err + self.rhs_err + self.tolerance

    def summary(self) -> str:
        flag = "pass" if self.ok else "FAIL"
        return (
            f"{flag} {self.statement}: gap {mp.nstr(self.gap, 6)} vs "
            f"budget {mp.nstr(self.lhs_err + self.rhs_err + self.tolerance, 6)}"
        )


def prop33_check(p: MomentPoint, tolerance=None, h_variant: str = "conj") -> IdentityReport:
    """Full re-expansion of the first off-diagonal wing at this point.

    Compares the direct shifted-convolution evaluation against the polar
    term plus all four signed Kloosterman wings, each side carrying its
    certified error.  Any fixed normalization mismatch shows up in the
    parts table as the lhs/rhs ratio; it is reported, never absorbed.
    """
    tolerance = mpf(tolerance) if tolerance is not None else mpf(10) * p.budget.eps
    lhs, lerr = od_direct(p, "dagger")
    pol = polar_term(p)
    pol_err = abs(pol) * mpf(2) ** (-(mp.prec - 10))
    jp, jpe = j_pm_series(p, 1, h_variant=h_variant)
    jm, jme = j_pm_series(p, -1, h_variant=h_variant)
    ep, epe = e_pm_series(p, 1)
    em, eme = e_pm_series(p, -1)
    rhs = pol + jp + jm + ep + em
    rerr = pol_err + jpe + jme + epe + eme
    parts = {
        "polar": pol,
        "j_plus": jp,
        "j_minus": jm,
        "e_plus": ep,
        "e_minus": em,
        "ratio": lhs / rhs if rhs != 0 else mpc("inf"),
        "h_variant": h_variant,
    }
    return IdentityReport(
        statement="off-diagonal wing equals polar term plus Kloosterman wings",
        lhs=lhs,
        rhs=rhs,
        lhs_err=pad(lerr),
        rhs_err=pad(rerr),
        tolerance=tolerance,
        parts=parts,
    )


# === spectral plumbing ===

_THETA = mpf(7) / 64

_CSV_HEADER = (
    "kind,t_f_or_k_re,t_f_or_k_im,epsilon,omega_re,omega_im,"
    "L1_re,L1_im,L2_re,L2_im,L3_re,L3_im,adj_re,adj_im"
)


@dataclass
class SpectralRecord:
    """One cuspidal or Eisenstein contribution, supplied externally.

    Spectral data is never computed here; records carry the eigenvalue
    parameter (t for weight-zero forms, the weight k for holomorphic
    ones), the root-number and Atkin-Lehner style signs, three completed
    L-values and the adjoint-square value the normalization divides by.
    """

    kind: str
    t_or_k: mpc
    epsilon: int
    omega: mpc
    L1: mpc
    L2: mpc
    L3: mpc
    adj: mpc

    def validate(self):
        if self.kind not in ("maass", "hol", "eis"):
            raise ValueError("kind must be maass, hol or eis")
        if self.epsilon not in (1, -1):
            raise ValueError("epsilon must be +1 or -1")
        if abs(self.adj) == 0:
            raise ValueError("adjoint value must be nonzero")
        t = to_mpc(self.t_or_k)
        if self.kind == "maass":
            # tempered or exceptional within the known bound
            if abs(t.imag) > _THETA + mpf("1e-30") and abs(t.real) > mpf("1e-30"):
                raise ValueError("eigenvalue parameter must be real or within the exceptional strip")
            if abs(t.imag) > _THETA + mpf("1e-30") and abs(t.real) <= mpf("1e-30"):
                raise ValueError("exceptional parameter exceeds the admissible strip")
        if self.kind == "hol":
            k = int(t.real)
            if abs(t - k) > mpf("1e-30") or k < 2 or k % 2:
                raise ValueError("holomorphic weight must be a positive even integer")
        return self


def write_spectral_records(path: str, records) -> None:
    from .precision import det_str

    with open(path, "w", newline="") as fh:
        fh.write(_CSV_HEADER + "\n")
        wr = csv.writer(fh)
        for r in records:
            t = to_mpc(r.t_or_k)
            row = [r.kind, det_str(t.real), det_str(t.imag), str(r.epsilon)]
            for z in (r.omega, r.L1, r.L2, r.L3, r.adj):
                z = to_mpc(z)
                row.extend([det_str(z.real), det_str(z.imag)])
            wr.writerow(row)


def read_spectral_records(path: str):
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError("unrecognized spectral record header")
        out = []
        for row in csv.reader(fh):
            if not row:
                continue
            kind = row[0].strip()
            vals = [mpf(x) for x in row[1:]]
            rec = SpectralRecord(
                kind=kind,
                t_or_k=mpc(vals[0], vals[1]),
                epsilon=int(vals[2]),
                omega=mpc(vals[3], vals[4]),
                L1=mpc(vals[5], vals[6]),
                L2=mpc(vals[7], vals[8]),
                L3=mpc(vals[9], vals[10]),
                adj=mpc(vals[11], vals[12]),
            )
            out.append(rec.validate())
    return out


@dataclass
class EisensteinParams:
    """A pair of characters and a spectral parameter describing one
    Eisenstein coset member."""

    psi1: DirichletCharacter
    psi2: DirichletCharacter
    t: mpf

    def nebentypus(self) -> DirichletCharacter:
        return self.psi1 * self.psi2


def eisenstein_eigenvalue(e: EisensteinParams, n: int) -> mpc:
    """Hecke eigenvalue of an Eisenstein member: the two-character
    divisor sum with opposite spectral rotations."""
    if n < 1:
        raise ValueError("index must be positive")
    it = mpc(0, 1) * mpf(e.t)
    total = mpc(0)
    for a in divisors(n):
        b = n // a
        total += e.psi1(a) * mpf(a) ** it * e.psi2(b) * mpf(b) ** (-it)
    return total


def eisenstein_hecke_sides(e: EisensteinParams, m: int, n: int, variant: str = "product"):
    """Both sides of a Hecke multiplicativity relation for Eisenstein
    eigenvalues.  variant "product" expands lambda(m) lambda(n); variant
    "inverse" expands lambda(mn)."""
    neb = e.nebentypus()
    if variant == "product":
        lhs = eisenstein_eigenvalue(e, m) * eisenstein_eigenvalue(e, n)
        rhs = mpc(0)
        for d in divisors(gcd(m, n)):
            rhs += neb(d) * eisenstein_eigenvalue(e, m * n // (d * d))
        return lhs, rhs
    if variant == "inverse":
        lhs = eisenstein_eigenvalue(e, m * n)
        rhs = mpc(0)
        for d in divisors(gcd(m, n)):
            mu = moebius(d)
            if mu == 0:
                continue
            rhs += mu * neb(d) * eisenstein_eigenvalue(e, m // d) * eisenstein_eigenvalue(e, n // d)
        return lhs, rhs
    raise ValueError("variant must be product or inverse")


def eisenstein_factor(t, s, psi, psi1, psi2) -> mpc:
    """The six-fold product of shifted L-values attached to an Eisenstein
    member, at spectral height t."""
    s1, s2, s3, s4 = (to_mpc(x) for x in s)
    A = (1 - s1 + s2 + s3 - s4) / 2
    B = (1 - s1 + s2 - s3 + s4) / 2
    C = (s1 + s2 + s3 + s4 - 1) / 2
    it = mpc(0, 1) * mpf(t)
    pb = psi.conjugate()
    return (
        dirichlet_l(A + it, pb * psi2)
        * dirichlet_l(A - it, pb * psi1)
        * dirichlet_l(B + it, pb * psi2)
        * dirichlet_l(B - it, pb * psi1)
        * dirichlet_l(C + it, psi * psi2.conjugate())
        * dirichlet_l(C - it, psi * psi1.conjugate())
    )


def spectral_terms_from_data(records, p: MomentPoint, which: str, sign: int = 1, families=None, eis_depth: int = 0):
    """Assemble one spectral block of the moment identity from records.

    which selects the weight-zero branch ("maass"), the holomorphic
    branch ("hol", plus sign only) or the continuous branch ("eis").
    families optionally maps (d, character label) cells to their own
    record lists; by default every cell consumes the same records.  The
    continuous branch is evaluated internally from character L-functions
    and needs no records; eis_depth refines its quadrature.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    q = p.q
    s1, s2, s3, s4 = p.s
    chib = p.chi.conjugate()
    tau_chib = chib.gauss_sum()
    psis = [c for c in primitive_characters(q) if c.order() > 2]
    if not psis:
        return mpc(0)

    def cell_records(d, psi):
        if families is None:
            return records
        return families.get((d, psi.label()), [])

    if which == "maass":
        pref = mpf(q) ** (s2 - s1 - 2) / tau_chib
        total = mpc(0)
        for d in divisors(q):
            mu = moebius(d)
            if mu == 0:
                continue
            for psi in psis:
                hf = h_factor(p.chi, psi, sign)
                cell = mpc(0)
                for r in cell_records(d, psi):
                    if r.kind != "maass":
                        continue
                    eps_pow = 1 if sign == 1 else r.epsilon
                    phi = phi_plus(mpc(0, 1) * r.t_or_k, p.s, p.tf) if sign == 1 else phi_minus(
                        mpc(0, 1) * r.t_or_k, p.s, p.tf
                    )
                    cell += eps_pow * r.L1 * r.L2 * r.L3 / r.adj * phi
                total += mpf(mu) / d * hf * cell
        return pref * total

    if which == "hol":
        if sign != 1:
            raise ValueError("holomorphic branch carries the plus sign only")
        pref = (
            mpf(q) ** (-2)
            / tau_chib
            * (2 * mp.pi / q) ** (s1 - s2)
            * mp.cos(mp.pi * (s3 - s4) / 2)
        )
        total = mpc(0)
        for d in divisors(q):
            mu = moebius(d)
            if mu == 0:
                continue
            for psi in psis:
                hf = h_factor(p.chi, psi, 1)
                cell = mpc(0)
                for r in cell_records(d, psi):
                    if r.kind != "hol":
                        continue
                    k = int(to_mpc(r.t_or_k).real)
                    xi = xi_transform(mpf(k - 1) / 2, p.s, p.tf)
                    cell += mpc(0, 1) ** k * r.L1 * r.L2 * r.L3 / r.adj * xi
                total += mpf(mu) / d * hf * cell
        return pref * total

    if which == "eis":
        pref = 2 * mpf(q) ** (s2 - s1 - 1) / (tau_chib * euler_phi(q))
        T = mpf(14) + 6 * eis_depth
        panels = 10 + 4 * eis_depth
        from .transforms import integrate_panels

        total = mpc(0)
        for d in divisors(q):
            mu = moebius(d)
            if mu == 0:
                continue
            for psi in psis:
                hf = h_factor(p.chi, psi, sign)
                psi2sq = psi * psi
                pairs = families.get(psi.label()) if isinstance(families, dict) else None
                if pairs is None:
                    from .characters import principal_character

                    pairs = [(psi2sq, principal_character(q))]
                cell = mpc(0)
                for p1, p2 in pairs:
                    prod = (p1 * p2).conjugate()

                    def f(t):
                        num = eisenstein_factor(t, p.s, psi, p1, p2)
                        den = abs(dirichlet_l(1 + 2 * mpc(0, 1) * t, prod)) ** 2
                        phi = (
                            phi_plus(mpc(0, 1) * t, p.s, p.tf)
                            if sign == 1
                            else phi_minus(mpc(0, 1) * t, p.s, p.tf)
                        )
                        return num / den * phi

                    pts = [-T + 2 * T * mpf(i) / panels for i in range(panels + 1)]
                    cell += integrate_panels(f, pts) / (2 * mp.pi)
                total += mpf(mu) / d * hf * cell
        return pref * total

    raise ValueError("which must be maass, hol or eis")


# === ramified-prime bookkeeping ===


def rankin_series(s, u, lam, psi: DirichletCharacter, truncation: int = 400, theta=_THETA):
    """Twisted divisor-weighted eigenvalue series against its L-quotient.

    lam is any callable returning the eigenvalue at a positive integer.
    Returns (lhs, rhs, tail); the quotient side is built from the plain
    eigenvalue series at the same truncation, and the tail bound uses
    |lam(n)| <= tau(n) n^theta.
    """
    s = to_mpc(s)
    u = to_mpc(u)
    q = psi.modulus
    N = int(truncation)
    pb = psi.conjugate()
    lhs = mpc(0)
    sig_u = sigma_table(N, u)
    lam_vals = [mpc(0)] * (N + 1)
    for n in range(1, N + 1):
        lam_vals[n] = to_mpc(lam(n))
        lhs += pb(n) * sig_u[n] * lam_vals[n] * mpf(n) ** (-s)

    def lser(z):
        tot = mpc(0)
        for n in range(1, N + 1):
            tot += pb(n) * lam_vals[n] * mpf(n) ** (-z)
        return tot

    rhs = lser(s) * lser(s - u) / zeta_q(2 * s - u, q)
    theta = mpf(theta)
    a1 = s.real - theta
    a2 = (s - u).real - theta
    tail = divisor_series_tail(N, a1 + min(0, u.real) - theta, 2) if a1 > 1 else mpf("inf")
    tail_l = divisor_series_tail(N, a1) + divisor_series_tail(N, a2)
    scale = abs(lser(s)) + abs(lser(s - u)) + 1
    return lhs, rhs, pad(tail + tail_l * scale / abs(zeta_q(2 * s - u, q)))


def sigma_q_function(s, psi_star: DirichletCharacter, lam, qarg: int, r1: int) -> mpc:
    """The finite correction sum carried by degenerate-character cells."""
    s1, s2, s3, s4 = (to_mpc(x) for x in s)
    tot = s1 + s2 + s3 + s4
    total = mpc(0)
    for c in divisors(qarg):
        mu1 = moebius(qarg // c)
        if mu1 == 0:
            continue
        inner = mpc(0)
        for e in divisors(c):
            mu2 = moebius(e)
            if mu2 == 0 or gcd(e, r1) > 1:
                continue
            inner += mu2 * psi_star(e) * mpf(e) ** ((1 - tot) / 2) * to_mpc(lam(c // e))
        total += mu1 * psi_star(qarg // c) * mpf(c) ** ((3 - tot) / 2) * inner
    return total


def pi_q_function(s, psi_star: DirichletCharacter, lam, qarg: int) -> mpc:
    """The Euler-product correction attached to ramified primes."""
    s1, s2, s3, s4 = (to_mpc(x) for x in s)
    A = (1 - s1 + s2 + s3 - s4) / 2
    B = (1 - s1 + s2 - s3 + s4) / 2
    from .arith import factorize

    total = mpc(0)
    for c in divisors(qarg):
        mu = moebius(qarg // c)
        if mu == 0:
            continue
        prod = mpc(1)
        for pp in factorize(c):
            lp = to_mpc(lam(pp))
            prod *= (1 - psi_star(pp) / pp)
            prod /= 1 - psi_star(pp) * lp * mpf(pp) ** (-A)
            prod /= 1 - psi_star(pp) * lp * mpf(pp) ** (-B)
        total += mu * prod
    return qarg * total


def degenerate_multiplicative_functions(lam_q, psi_desc: str, s, q: int):
    """Both ramified correction factors for a degenerate character cell.

    lam_q is the eigenvalue at the modulus; powers follow the ramified
    geometric rule.  psi_desc chooses the cell: "principal" or
    "quadratic".
    """
    from .characters import principal_character, quadratic_character

    if psi_desc == "principal":
        psi = principal_character(q)
    elif psi_desc == "quadratic":
        psi = quadratic_character(q)
    else:
        raise ValueError("descriptor must be principal or quadratic")
    star = psi.primitive_part()
    lam_q = to_mpc(lam_q)

    def lam(n):
        if n == 1:
            return mpc(1)
        v, m = 0, n
        while m % q == 0:
            m //= q
            v += 1
        if m != 1:
            raise ValueError("eigenvalue requested off the ramified tower")
        return lam_q**v

    return (
        sigma_q_function(s, star, lam, q, q),
        pi_q_function(s, star, lam, q),
    )


def ramified_geometric_sides(lam_q, w, s, q: int, J: int = 60):
    """Both sides of the ramified geometric-series identity, truncated.

    Returns (lhs, rhs, tail).  Convergence needs |lam_q| < q^(Re s -
    max(0, Re w)).
    """
    lam_q = to_mpc(lam_q)
    w = to_mpc(w)
    s = to_mpc(s)
    rho = abs(lam_q) * mpf(q) ** (max(mpf(0), w.real) - s.real)
    if rho >= 1:
        raise ValueError("outside the convergence region")
    qs = mpf(q) ** (-s)
    # modulus divisors: the trivial one carries a minus sign, the full
    # one shifts the tower by a step
    lhs = mpc(0)
    for j in range(J + 1):
        lhs -= sigma_power(q**j, w) * lam_q**j * qs**j
        lhs += mpf(q) ** (1 - s) * sigma_power(q ** (j + 1), w) * lam_q ** (j + 1) * qs**j
    rhs = euler_phi(q) / ((1 - lam_q * qs) * (1 - lam_q * mpf(q) ** (w - s))) - q
    tail = (J + 3) * (1 + mpf(q) ** abs(1 - s.real) * (1 + abs(lam_q) * rho)) * geometric_tail(
        rho ** (J + 1), rho
    )
    return lhs, rhs, pad(tail)


def q_smooth_switch_sides(psi: DirichletCharacter, lam, w, s, J: int = 40):
    """Both sides of the twisted smooth-part rearrangement at a prime
    modulus: the Gauss-sum weighted tower against its primitive-part
    rewrite."""
    r = psi.modulus
    if r != 1 and not is_prime(r):
        raise ValueError("prime modulus only")
    w = to_mpc(w)
    s = to_mpc(s)
    star = psi.primitive_part()
    rstar = star.modulus
    lhs = mpc(0)
    for j in range(J + 1):
        n = r**j if r > 1 else 1
        lhs += psi.gauss_sum_twisted(n) * sigma_power(n, w) * to_mpc(lam(n)) * mpf(n) ** (-s)
        if r == 1:
            break
    rhs = mpc(0)
    ratio = r // rstar if r > 1 else 1
    for c in divisors(ratio):
        mu = moebius(ratio // c)
        if mu == 0:
            continue
        inner = mpc(0)
        for j in range(J + 1):
            n = r**j if r > 1 else 1
            nc = n * c
            inner += star(n) * sigma_power(nc, w) * to_mpc(lam(nc)) * mpf(nc) ** (-s)
            if r == 1:
                break
        rhs += c * star(ratio // c) * mu * inner
    rhs *= star.gauss_sum()
    return lhs, rhs
