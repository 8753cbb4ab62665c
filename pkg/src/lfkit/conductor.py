"""Local representation descriptors and the twisted-conductor decision
procedure.

Everything is built over one odd prime at a time: local multiplicative
characters are realized as genuine Dirichlet characters of p-power
modulus carrying an extra unramified exponent, so conductors of products
come out of exact character arithmetic rather than inequality reasoning.
A global (squarefree) answer is the product of local answers.

The three families of local representations carry their defining
characters; twisting acts componentwise on principal series, on the
twisting line of a special representation, and is supported for
supercuspidals only in the one configuration the twisted-moment pipeline
needs (exponent two, twist by an exponent-one character, trivial twisted
central character).  Anything else raises, carrying the phrase
"insufficient local data".
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .arith import factorize, is_prime, is_squarefree
from .characters import (
    DirichletCharacter,
    principal_character,
    quadratic_character,
)
from .precision import to_mpc

__all__ = [
    "LocalCharacter",
    "PrincipalSeries",
    "Special",
    "Supercuspidal",
    "GlobalNewformDescriptor",
    "char_conductor_exponent",
    "rep_conductor_exponent",
    "central_character",
    "twist",
    "is_twist_minimal",
    "standard_representation",
    "component_character",
    "theorem_a1_conductor",
    "exponent_rule_audit",
]


def _p_valuation(n: int, p: int) -> int:
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    if n != 1:
        raise ValueError("modulus is not a power of the expected prime")
    return e


@dataclass(frozen=True)
class LocalCharacter:
    """A character of the local multiplicative group: finite part times
    an unramified power |.|^s.

    The finite part is a Dirichlet character of p-power modulus (modulus
    1 for a purely unramified character).
    """

    finite: DirichletCharacter
    s: complex = 0

    @property
    def prime(self) -> int:
        m = self.finite.modulus
        if m == 1:
            return 0
        fac = factorize(m)
        if len(fac) != 1:
            raise ValueError("finite part must have prime-power modulus")
        return fac[0][0]

    def conductor_exponent(self) -> int:
        m = self.finite.modulus
        if m == 1:
            return 0
        return _p_valuation(self.finite.conductor(), self.prime)

    def is_unramified(self) -> bool:
        return self.conductor_exponent() == 0

    def __mul__(self, other: "LocalCharacter") -> "LocalCharacter":
        pa, pb = self.prime, other.prime
        if pa and pb and pa != pb:
            raise ValueError("local characters live at different primes")
        return LocalCharacter(self.finite * other.finite, to_mpc(self.s) + to_mpc(other.s))

    def inverse(self) -> "LocalCharacter":
        return LocalCharacter(self.finite.conjugate(), -to_mpc(self.s))

    def primitive_finite(self) -> DirichletCharacter:
        return self.finite.primitive_part()

    def same_finite(self, other: "LocalCharacter") -> bool:
        a = self.finite.primitive_part()
        b = other.finite.primitive_part()
        return a.modulus == b.modulus and a.exponents == b.exponents


def unramified(s=0) -> LocalCharacter:
    return LocalCharacter(principal_character(1), s)


@dataclass(frozen=True)
class PrincipalSeries:
    """pi = w1 boxplus w2, induced from the Borel."""

    w1: LocalCharacter
    w2: LocalCharacter


@dataclass(frozen=True)
class Special:
    """pi = w St, the twisted Steinberg line."""

    w: LocalCharacter


@dataclass(frozen=True)
class Supercuspidal:
    """Compactly induced; only the conductor-facing data is kept.

    The exponent and central character are stored because no general
    twist formula is available at this level of description.
    """

    sc_type: str
    exponent: int
    central: LocalCharacter
    twist_minimal: bool = True

    def __post_init__(self):
        if self.sc_type not in ("I", "II"):
            raise ValueError("supercuspidal type must be I or II")
        if self.exponent < 2:
            raise ValueError("supercuspidal conductor exponent is at least 2")


def char_conductor_exponent(w: LocalCharacter) -> int:
    """Conductor exponent of a local character: the unramified part
    contributes nothing."""
    return w.conductor_exponent()


def rep_conductor_exponent(pi) -> int:
    if isinstance(pi, PrincipalSeries):
        return char_conductor_exponent(pi.w1) + char_conductor_exponent(pi.w2)
    if isinstance(pi, Special):
        cw = char_conductor_exponent(pi.w)
        return 1 if cw == 0 else 2 * cw
    if isinstance(pi, Supercuspidal):
        return pi.exponent
    raise TypeError("not a local representation")


def central_character(pi) -> LocalCharacter:
    if isinstance(pi, PrincipalSeries):
        return pi.w1 * pi.w2
    if isinstance(pi, Special):
        return pi.w * pi.w
    if isinstance(pi, Supercuspidal):
        return pi.central
    raise TypeError("not a local representation")


def twist(pi, chi: LocalCharacter):
    """The twist pi (x) chi, with its central character moved to
    omega_pi chi^2.

    Principal series twist componentwise and special representations
    along their defining line.  A supercuspidal twist is computable only
    in the configuration the decision procedure needs: exponent two,
    exponent-one twisting character, and trivial twisted central
    character; otherwise the available description is too coarse.
    """
    if isinstance(pi, PrincipalSeries):
        return PrincipalSeries(pi.w1 * chi, pi.w2 * chi)
    if isinstance(pi, Special):
        return Special(pi.w * chi)
    if isinstance(pi, Supercuspidal):
        twisted_central = pi.central * chi * chi
        if (
            pi.exponent == 2
            and char_conductor_exponent(chi) == 1
            and twisted_central.conductor_exponent() == 0
            and pi.twist_minimal
        ):
            return Supercuspidal(pi.sc_type, 2, twisted_central, True)
        raise ValueError(
            "insufficient local data: supercuspidal twist outside the supported configuration"
        )
    raise TypeError("not a local representation")


def is_twist_minimal(pi, candidates) -> bool:
    """True when no candidate twist strictly lowers the conductor
    exponent.  Undecidable supercuspidal twists propagate their error."""
    base = rep_conductor_exponent(pi)
    for chi in candidates:
        if rep_conductor_exponent(twist(pi, chi)) < base:
            return False
    return True


# === canonical local cells ===


def component_character(psi: DirichletCharacter, p: int) -> DirichletCharacter:
    """The mod-p component of a character of squarefree modulus."""
    q = psi.modulus
    if q % p:
        raise ValueError("prime does not divide the modulus")
    from .arith import crt

    m = q // p
    out = None
    for cand in _characters_mod(p):
        ok = True
        for n in range(1, p):
            lift = crt([n, 1], [p, m]) if m > 1 else n
            if abs(cand(n) - psi(lift)) > mpf(2) ** (10 - mp.prec):
                ok = False
                break
        if ok:
            out = cand
            break
    if out is None:
        raise ValueError("no component character matched")
    return out


def _characters_mod(p: int):
    from .characters import character_group

    return list(character_group(p))


def standard_representation(p: int, d: int, psi_p: DirichletCharacter, kind: str):
    """A canonical local representation for one decision cell.

    The cell is fixed by the local level exponent (d = 1 or p), the
    component character and the representation kind.  Central characters
    come out equal to the square of the component, as the global
    descriptor requires.
    """
    if d not in (1, p):
        raise ValueError("local level divisor must be 1 or p")
    quad = psi_p.order() <= 2
    psis = LocalCharacter(psi_p)
    central = psis * psis
    if d == 1:
        # level exponent one
        if quad:
            if kind != "special":
                raise ValueError("level-one cell with trivial central square is special")
            return Special(unramified())
        if kind != "principal-series":
            raise ValueError("level-one cell with ramified central square is principal series")
        return PrincipalSeries(central, unramified())
    # level exponent two
    if quad:
        if kind == "principal-series":
            wq = LocalCharacter(quadratic_character(p))
            return PrincipalSeries(wq, wq)
        if kind == "special":
            return Special(LocalCharacter(quadratic_character(p)))
        if kind == "supercuspidal":
            return Supercuspidal("I", 2, central, True)
        raise ValueError("unknown representation kind")
    nu = LocalCharacter(quadratic_character(p))
    if kind == "principal-series":
        return PrincipalSeries(psis * nu, psis * nu)
    if kind == "special":
        return Special(psis * nu)
    if kind == "supercuspidal":
        return Supercuspidal("I", 2, central, True)
    raise ValueError("unknown representation kind")


@dataclass
class GlobalNewformDescriptor:
    """Data identifying the twisted-conductor question for one newform.

    psi is primitive of odd squarefree modulus q, d divides q, and the
    local representation kind is given per prime (a single string applies
    at every ramified prime).  Local representations may also be supplied
    explicitly.
    """

    q: int
    d: int
    psi: DirichletCharacter
    kind: str | dict = "special"
    local_reps: dict | None = None

    def __post_init__(self):
        if self.q < 3 or self.q % 2 == 0 or not is_squarefree(self.q):
            raise ValueError("modulus must be odd and squarefree")
        if self.q % self.psi.modulus or self.psi.modulus != self.q:
            raise ValueError("character modulus must equal q")
        if not self.psi.is_primitive:
            raise ValueError("character must be primitive")
        if self.d < 1 or self.q % self.d:
            raise ValueError("d must divide q")

    def kind_at(self, p: int) -> str:
        if isinstance(self.kind, dict):
            return self.kind[p]
        return self.kind

    def local_rep(self, p: int):
        psi_p = component_character(self.psi, p) if self.q > p else self.psi
        if self.local_reps and p in self.local_reps:
            rep = self.local_reps[p]
        else:
            dp = p if self.d % p == 0 else 1
            rep = standard_representation(p, dp, psi_p, self.kind_at(p))
        want = (LocalCharacter(psi_p) * LocalCharacter(psi_p)).primitive_finite()
        have = central_character(rep).primitive_finite()
        if want.modulus != have.modulus or want.exponents != have.exponents:
            raise ValueError("central character mismatch between descriptor and representation")
        return rep, psi_p


def theorem_a1_conductor(desc: GlobalNewformDescriptor) -> int:
    """Conductor of the twist by the conjugate character, prime by prime.

    Each local exponent is computed by actually twisting the local
    representation and reading off its conductor exponent; the published
    decision table is reproduced, never consulted.
    """
    total = 1
    for p, _ in factorize(desc.q):
        rep, psi_p = desc.local_rep(p)
        chi = LocalCharacter(psi_p.conjugate())
        exponent = rep_conductor_exponent(twist(rep, chi))
        total *= p**exponent
    return total


def exponent_rule_audit(p: int) -> dict:
    """Exact exponent arithmetic for the ramified-central cell at p.

    For every primitive nonquadratic psi mod p, builds the level-one
    principal series with ramified-times-unramified data and central
    character matching the square, twists by the conjugate, and records
    the two component exponents (both must equal one) plus the twisted
    total.  Returns a mapping psi label -> (c(w1 chi), c(w2 chi), total).
    """
    if not is_prime(p):
        raise ValueError("prime modulus required")
    from .characters import primitive_characters

    out = {}
    for psi in primitive_characters(p):
        if psi.order() <= 2:
            continue
        chi = LocalCharacter(psi.conjugate())
        w1 = LocalCharacter(psi) * LocalCharacter(psi)   # ramified, exponent 1
        w2 = unramified()
        pi = PrincipalSeries(w1, w2)
        if rep_conductor_exponent(pi) != 1:
            raise AssertionError("level-one cell must have exponent one")
        c1 = char_conductor_exponent(w1 * chi)
        c2 = char_conductor_exponent(w2 * chi)
        total = rep_conductor_exponent(twist(pi, chi))
        out[psi.label()] = (c1, c2, total)
    return out
