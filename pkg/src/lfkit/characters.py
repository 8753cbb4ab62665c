"""Dirichlet characters with exact values.

A character mod q is represented by its exponent vector with respect to a
fixed generator system of (Z/q)^*: odd prime powers contribute the least
primitive root, 4 contributes 3, and 2^k for k >= 3 contributes the pair
(-1, 5).  Values are exact rational phases (Fractions mod 1), so products
of character values, Gauss sums and Jacobi sums are assembled exactly and
rounded only once, at evaluation time.

The module also carries the closed character-sum evaluations used by the
moment identities: the twisted Gauss sum reduction to the primitive part,
the two-character linear sums over a prime modulus, and the weighted
average of the arithmetic factor H(chi, psi) over primitive characters.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd

from mpmath import mp, mpc

from .arith import (
    crt,
    divisors,
    euler_phi,
    factorize,
    is_prime,
    moebius,
    primitive_root,
    ramanujan_sum,
)
from .exact import PhaseSum, root_of_unity

__all__ = [
    "DirichletCharacter",
    "character_group",
    "principal_character",
    "quadratic_character",
    "primitive_characters",
    "gauss_sum_twisted_closed",
    "pair_sum_direct",
    "pair_sum_closed",
    "pair_sum_conjugate",
    "h_factor",
    "g_factor",
    "h_factor_primitive_average",
    "chi_shift_gauss_identity",
]


# === generator structure of (Z/q)^* ===


@lru_cache(maxsize=None)
def _structure(q: int):
    """Flat lists (moduli, gens, orders) and discrete-log tables for q."""
    if q < 1:
        raise ValueError("modulus must be positive")
    comp_mods = []   # prime power each generator lives in
    gens = []
    orders = []
    tables = []      # per prime power: dict residue -> local exponent tuple
    spans = []       # how many generators each prime power contributes
    for p, k in factorize(q):
        m = p**k
        if p == 2:
            if k == 1:
                spans.append((m, 0))
                tables.append({1: ()})
                continue
            if k == 2:
                spans.append((m, 1))
                comp_mods.append(m)
                gens.append(3)
                orders.append(2)
                tables.append({1: (0,), 3: (1,)})
                continue
            # k >= 3: units are (-1)^s 5^t
            spans.append((m, 2))
            comp_mods.extend([m, m])
            gens.extend([m - 1, 5])
            orders.extend([2, 2 ** (k - 2)])
            tab = {}
            for s in range(2):
                v = (m - 1) ** s % m
                for t in range(2 ** (k - 2)):
                    tab[v * pow(5, t, m) % m] = (s, t)
            tables.append(tab)
        else:
            g = primitive_root(m)
            ordm = euler_phi(m)
            spans.append((m, 1))
            comp_mods.append(m)
            gens.append(g)
            orders.append(ordm)
            tab = {}
            v = 1
            for t in range(ordm):
                tab[v] = (t,)
                v = v * g % m
            tables.append(tab)
    # lift each component generator to a global unit that is 1 at the
    # other prime powers, so chi(crt_gens[i]) = e(exponents[i] / orders[i])
    crt_gens = []
    for m, g in zip(comp_mods, gens):
        rest = q // m
        crt_gens.append(g if rest == 1 else crt([g, 1], [m, rest]))
    return {
        "q": q,
        "comp_mods": tuple(comp_mods),
        "gens": tuple(gens),
        "orders": tuple(orders),
        "tables": tuple(tables),
        "spans": tuple(spans),
        "crt_gens": tuple(crt_gens),
    }


def _decompose(struct, n: int):
    """Exponent tuple of n in the generator system, or None if not a unit."""
    q = struct["q"]
    n %= q
    if q == 1:
        return ()
    if gcd(n, q) != 1:
        return None
    out = []
    for (m, _), tab in zip(struct["spans"], struct["tables"]):
        out.extend(tab[n % m])
    return tuple(out)


# === the character class ===


class DirichletCharacter:
    """A Dirichlet character chi mod q, stored as generator exponents."""

    __slots__ = ("modulus", "exponents", "_struct", "_conductor", "_tables")

    def __init__(self, modulus: int, exponents=()):
        st = _structure(modulus)
        orders = st["orders"]
        if len(exponents) != len(orders):
            raise ValueError(
                f"modulus {modulus} needs {len(orders)} exponents, "
                f"got {len(exponents)}"
            )
        exps = tuple(int(e) % o for e, o in zip(exponents, orders))
        self.modulus = modulus
        self.exponents = exps
        self._struct = st
        self._conductor = None
        self._tables = {}

    # --- basic protocol ---

    def __repr__(self):
        return f"DirichletCharacter({self.modulus}, {self.exponents})"

    def __eq__(self, other):
        return (
            isinstance(other, DirichletCharacter)
            and self.modulus == other.modulus
            and self.exponents == other.exponents
        )

    def __hash__(self):
        return hash((self.modulus, self.exponents))

    # --- values ---

    def angle(self, n: int):
        """Exact phase a/b with chi(n) = e(a/b), or None when gcd(n, q) > 1."""
        exps_n = _decompose(self._struct, n)
        if exps_n is None:
            return None
        a = Fraction(0)
        for e, t, o in zip(self.exponents, exps_n, self._struct["orders"]):
            if e and t:
                a += Fraction(e * t, o)
        return a % 1

    def __call__(self, n: int) -> mpc:
        a = self.angle(n)
        if a is None:
            return mpc(0)
        return root_of_unity(a)

    def value_table(self):
        """chi(0), ..., chi(q-1) as mpc, cached per working precision."""
        key = mp.prec
        tab = self._tables.get(key)
        if tab is None:
            tab = [self(n) for n in range(self.modulus)]
            self._tables[key] = tab
        return tab

    # --- group structure ---

    @property
    def is_principal(self) -> bool:
        return all(e == 0 for e in self.exponents)

    def order(self) -> int:
        o = 1
        for e, m in zip(self.exponents, self._struct["orders"]):
            if e:
                d = m // gcd(e, m)
                o = o * d // gcd(o, d)
        return o

    def is_even(self) -> bool:
        return self.angle(-1) == 0

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(
            self.modulus, tuple(-e for e in self.exponents)
        )

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.modulus == other.modulus:
            return DirichletCharacter(
                self.modulus,
                tuple(a + b for a, b in zip(self.exponents, other.exponents)),
            )
        lcm = self.modulus * other.modulus // gcd(self.modulus, other.modulus)
        return self.induce(lcm) * other.induce(lcm)

    def __pow__(self, k: int) -> "DirichletCharacter":
        return DirichletCharacter(
            self.modulus, tuple(e * k for e in self.exponents)
        )

    def induce(self, bigq: int) -> "DirichletCharacter":
        """The character mod bigq defined by this one (q | bigq required)."""
        if bigq % self.modulus:
            raise ValueError("can only induce to a multiple of the modulus")
        st = _structure(bigq)
        exps = []
        for g, o in zip(st["crt_gens"], st["orders"]):
            a = self.angle(g)
            # g is a unit mod bigq, hence a unit mod q: angle exists
            e = a * o
            if e.denominator != 1:
                raise ArithmeticError("induced exponent not integral")
            exps.append(int(e))
        return DirichletCharacter(bigq, tuple(exps))

    def conductor(self) -> int:
        """Smallest d | q such that chi is trivial on units = 1 mod d."""
        if self._conductor is not None:
            return self._conductor
        q = self.modulus
        for d in divisors(q):
            ok = True
            for n in range(1 + d, q + 1, d) if d < q else []:
                if gcd(n, q) == 1 and self.angle(n) != 0:
                    ok = False
                    break
            if ok:
                self._conductor = d
                return d
        self._conductor = q
        return q

    @property
    def is_primitive(self) -> bool:
        return self.conductor() == self.modulus

    def primitive_part(self) -> "DirichletCharacter":
        """The primitive character mod conductor(chi) inducing chi."""
        f = self.conductor()
        if f == self.modulus:
            return self
        q = self.modulus
        st = _structure(f)
        exps = []
        for g, o in zip(st["crt_gens"], st["orders"]):
            n = g
            while gcd(n, q) != 1:
                n += f
            a = self.angle(n)
            e = a * o
            if e.denominator != 1:
                raise ArithmeticError("primitive part exponent not integral")
            exps.append(int(e))
        return DirichletCharacter(f, tuple(exps))

    # --- classical sums ---

    def gauss_sum(self) -> mpc:
        """tau(chi) = sum over b mod q of chi(b) e(b/q)."""
        return self.gauss_sum_twisted(1)

    def gauss_sum_twisted(self, h: int) -> mpc:
        """tau(chi, h) = sum over b mod q of chi(b) e(b h / q)."""
        q = self.modulus
        if q == 1:
            return mpc(1)
        ps = PhaseSum()
        for b in range(1, q):
            a = self.angle(b)
            if a is not None:
                ps.add(a + Fraction(b * h, q))
        return ps.evaluate()

    def jacobi_with(self, other: "DirichletCharacter") -> mpc:
        """J(chi, psi) = sum over a mod q of chi(a) psi(1 - a)."""
        if other.modulus != self.modulus:
            raise ValueError("Jacobi sum needs equal moduli")
        q = self.modulus
        ps = PhaseSum()
        for a in range(q):
            x = self.angle(a)
            if x is None:
                continue
            y = other.angle(1 - a)
            if y is None:
                continue
            ps.add(x + y)
        return ps.evaluate()

    # --- serialization ---

    def as_dict(self):
        return {"modulus": self.modulus, "exponents": list(self.exponents)}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["modulus"]), tuple(int(e) for e in d["exponents"]))

    @classmethod
    def from_label(cls, label: str):
        """Parse 'q' (principal) or 'q:e1,e2,...'."""
        if ":" in label:
            qs, es = label.split(":", 1)
            exps = tuple(int(t) for t in es.split(",") if t.strip() != "")
        else:
            qs, exps = label, ()
        q = int(qs)
        want = len(_structure(q)["orders"])
        if len(exps) < want:
            exps = exps + (0,) * (want - len(exps))
        return cls(q, exps)

    def label(self) -> str:
        if not self.exponents:
            return str(self.modulus)
        return f"{self.modulus}:" + ",".join(str(e) for e in self.exponents)


# === group-level constructors ===


def character_group(q: int):
    """All characters mod q, principal first, in lexicographic order."""
    orders = _structure(q)["orders"]
    return [
        DirichletCharacter(q, exps)
        for exps in product(*(range(o) for o in orders))
    ]


def principal_character(q: int) -> DirichletCharacter:
    return DirichletCharacter(q, (0,) * len(_structure(q)["orders"]))


def quadratic_character(q: int) -> DirichletCharacter:
    """The real primitive character mod odd squarefree q (Jacobi symbol)."""
    st = _structure(q)
    if any(p == 2 or k > 1 for p, k in factorize(q)):
        raise ValueError("quadratic_character expects odd squarefree q")
    return DirichletCharacter(q, tuple(o // 2 for o in st["orders"]))


def primitive_characters(q: int, nonquadratic: bool = False):
    out = [chi for chi in character_group(q) if chi.is_primitive]
    if nonquadratic:
        out = [chi for chi in out if chi.order() > 2]
    return out


# === closed evaluations ===


def gauss_sum_twisted_closed(chi: DirichletCharacter, n: int) -> mpc:
    """tau(chi, n) via the primitive part chi* mod q*.

    For chi nontrivial mod q and n >= 1:
    tau(chi, n) = tau(chi*) * sum over d | (n, q/q*) of
    d chi*bar(n/d) chi*(q/(d q*)) mu(q/(d q*)).
    """
    if chi.is_principal and chi.modulus > 1:
        raise ValueError("closed twisted Gauss sum needs a nontrivial character")
    q = chi.modulus
    star = chi.primitive_part()
    qs = star.modulus
    ratio = q // qs
    tau_star = star.gauss_sum()
    total = mpc(0)
    g = gcd(n, ratio)
    for d in divisors(g):
        m = ratio // d
        mu = moebius(m)
        if mu == 0:
            continue
        v = star.conjugate()(n // d) * star(m)
        total += d * mu * v
    return tau_star * total


def pair_sum_direct(psi1, psi2, a, b, c, d) -> mpc:
    """sum over t mod q of psi1(a t + b) psi2(c t + d), by brute force."""
    q = psi1.modulus
    if psi2.modulus != q:
        raise ValueError("pair sum needs equal moduli")
    ps = PhaseSum()
    for t in range(q):
        x = psi1.angle(a * t + b)
        if x is None:
            continue
        y = psi2.angle(c * t + d)
        if y is None:
            continue
        ps.add(x + y)
    return ps.evaluate()


def pair_sum_closed(psi1, psi2, a, b, c, d) -> mpc:
    """Closed form of the two-character linear sum over a prime modulus.

    Requires q prime, psi1 and psi2 primitive with psi1 psi2 nontrivial,
    and gcd(a, c, q) = 1.  The sum vanishes unless both a and c are units,
    in which case it equals
    psi1bar(c) psi2bar(a) (psi1 psi2)(a d - b c)
    tau(psi1) tau(conj(psi1 psi2)) / tau(psi2bar).
    """
    q = psi1.modulus
    if psi2.modulus != q or not is_prime(q):
        raise ValueError("closed pair sum needs a common prime modulus")
    if not (psi1.is_primitive and psi2.is_primitive):
        raise ValueError("closed pair sum needs primitive characters")
    if (psi1 * psi2).is_principal:
        raise ValueError("closed pair sum needs psi1 psi2 nontrivial")
    if a % q == 0 and c % q == 0:
        raise ValueError("hypothesis gcd(a, c, q) = 1 violated")
    if a % q == 0 or c % q == 0:
        return mpc(0)
    prod = psi1 * psi2
    val = (
        psi1.conjugate()(c)
        * psi2.conjugate()(a)
        * prod(a * d - b * c)
    )
    return (
        val
        * psi1.gauss_sum()
        * prod.conjugate().gauss_sum()
        / psi2.conjugate().gauss_sum()
    )


def pair_sum_conjugate(psi, a, b, c, d) -> mpc:
    """sum over t of psi(a t + b) psibar(c t + d) for unit a, c mod prime q.

    Equals psi(a) psibar(c) r_q(a d - b c) with r_q the Ramanujan sum.
    """
    q = psi.modulus
    if not is_prime(q):
        raise ValueError("conjugate pair sum stated for prime modulus")
    if a % q == 0 or c % q == 0:
        raise ValueError("conjugate pair sum needs unit a and c")
    return psi(a) * psi.conjugate()(c) * ramanujan_sum(a * d - b * c, q)


def h_factor(chi, psi, sign: int) -> mpc:
    """H_sign(chi, psi) = psi(-sign) tau(psi) tau(conj(chi psi)) J(psi, psi)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if chi.modulus != psi.modulus:
        raise ValueError("h_factor needs equal moduli")
    front = psi(-sign)
    return (
        front
        * psi.gauss_sum()
        * (chi * psi).conjugate().gauss_sum()
        * psi.jacobi_with(psi)
    )


def g_factor(chi, psi, sign: int) -> mpc:
    """G_sign(chi, psi) = psi(-sign) tau(psi) tau(psi*)^2 tau(chibar psi).

    psi may be imprimitive; its modulus must divide the modulus of chi.
    psi* is the primitive part, and every tau is taken at the stated
    modulus of its character (so tau(psi) can vanish or shrink while
    tau(psi*) does not).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if chi.modulus % psi.modulus:
        raise ValueError("g_factor needs psi modulus dividing chi modulus")
    star = psi.primitive_part()
    return (
        psi(-sign)
        * psi.gauss_sum()
        * star.gauss_sum() ** 2
        * (chi.conjugate() * psi).gauss_sum()
    )


def h_factor_primitive_average(q: int, psi, sign: int) -> mpc:
    """sum over primitive chi mod q of H_sign(chi, psi) / tau(chibar).

    For psi primitive nonquadratic mod q this collapses to
    psi(sign) J(psi, psi), a number of absolute value sqrt(q).
    """
    total = mpc(0)
    for chi in primitive_characters(q):
        total += h_factor(chi, psi, sign) / chi.conjugate().gauss_sum()
    return total


def chi_shift_gauss_identity(chi, c: int, d: int):
    """Three evaluations of sum_{a,b} chibar(a) chi(a+b) e((a c + b d)/q).

    Returns (direct double sum, tau(chi, d) conj(tau(chi, d - c)),
    chibar(d) chi(d - c) q), which agree for chi primitive mod q.
    """
    q = chi.modulus
    ps = PhaseSum()
    bar = chi.conjugate()
    for a in range(q):
        x = bar.angle(a)
        if x is None:
            continue
        for b in range(q):
            y = chi.angle(a + b)
            if y is None:
                continue
            ps.add(x + y + Fraction((a * c + b * d) % q, q))
    direct = ps.evaluate()
    via_gauss = chi.gauss_sum_twisted(d) * chi.gauss_sum_twisted(d - c).conjugate()
    closed = bar(d) * chi(d - c) * q
    return direct, via_gauss, closed
