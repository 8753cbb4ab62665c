"""Elementary integer arithmetic used throughout the package.

Everything here is exact integer work: factorization by trial division
(arguments stay far below the range where that hurts), multiplicative
functions, primitive roots, and Chinese remaindering.  No floating point.
"""

from __future__ import annotations

from functools import lru_cache
from math import gcd, isqrt

__all__ = [
    "factorize",
    "divisors",
    "moebius",
    "euler_phi",
    "is_prime",
    "is_squarefree",
    "radical",
    "primitive_root",
    "inv_mod",
    "crt",
    "smooth_split",
    "divisor_count",
    "sigma_int",
    "ramanujan_sum",
]


@lru_cache(maxsize=None)
def factorize(n: int):
    """Return the prime factorization of n >= 1 as a tuple of (p, e) pairs."""
    if n < 1:
        raise ValueError("factorize expects n >= 1")
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    # trial division with a 6k +- 1 wheel
    p = 5
    while p * p <= n:
        for q in (p, p + 2):
            if n % q == 0:
                e = 0
                while n % q == 0:
                    n //= q
                    e += 1
                out.append((q, e))
        p += 6
    if n > 1:
        out.append((n, 1))
    return tuple(sorted(out))


def divisors(n: int):
    """All positive divisors of n in increasing order."""
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def moebius(n: int) -> int:
    if n < 1:
        raise ValueError("moebius expects n >= 1")
    mu = 1
    for _, e in factorize(n):
        if e > 1:
            return 0
        mu = -mu
    return mu


def euler_phi(n: int) -> int:
    phi = 1
    for p, e in factorize(n):
        phi *= (p - 1) * p ** (e - 1)
    return phi


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == ((n, 1),)


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n))


def radical(n: int) -> int:
    r = 1
    for p, _ in factorize(n):
        r *= p
    return r


def divisor_count(n: int) -> int:
    t = 1
    for _, e in factorize(n):
        t *= e + 1
    return t


def sigma_int(n: int, k: int = 1) -> int:
    """Sum of k-th powers of divisors, for integer k >= 0."""
    s = 1
    for p, e in factorize(n):
        if k == 0:
            s *= e + 1
        else:
            s *= (p ** (k * (e + 1)) - 1) // (p**k - 1)
    return s


@lru_cache(maxsize=None)
def primitive_root(q: int) -> int:
    """Least primitive root modulo q, for q in {1, 2, 4, p^k, 2 p^k}, p odd."""
    if q in (1, 2):
        return 1
    if q == 4:
        return 3
    fac = factorize(q)
    odd = [(p, e) for p, e in fac if p != 2]
    two = [(p, e) for p, e in fac if p == 2]
    if len(odd) != 1 or (two and two[0][1] > 1):
        raise ValueError(f"no primitive root modulo {q}")
    phi = euler_phi(q)
    prime_divs = [p for p, _ in factorize(phi)]
    for g in range(2, q):
        if gcd(g, q) != 1:
            continue
        if all(pow(g, phi // p, q) != 1 for p in prime_divs):
            return g
    raise ValueError(f"no primitive root modulo {q}")


def inv_mod(a: int, m: int) -> int:
    """Inverse of a modulo m, raising if gcd(a, m) > 1."""
    return pow(a, -1, m)


def crt(residues, moduli) -> int:
    """Solve x = r_i mod m_i for pairwise coprime moduli; x in [0, prod)."""
    x, m = 0, 1
    for r, mi in zip(residues, moduli):
        if gcd(m, mi) != 1:
            raise ValueError("crt moduli must be pairwise coprime")
        # lift x from modulus m to modulus m * mi
        t = ((r - x) * inv_mod(m % mi, mi)) % mi
        x += m * t
        m *= mi
    return x % m


def smooth_split(n: int, q: int):
    """Write n = n0 * n1 with n0 | q^infinity and gcd(n1, q) = 1."""
    if n < 1 or q < 1:
        raise ValueError("smooth_split expects positive arguments")
    n0 = 1
    n1 = n
    g = gcd(n1, q)
    while g > 1:
        while n1 % g == 0:
            n1 //= g
            n0 *= g
        g = gcd(n1, g)
    # n1 may still share primes with q through a different divisor
    g = gcd(n1, q)
    while g > 1:
        while n1 % g == 0:
            n1 //= g
            n0 *= g
        g = gcd(n1, q)
    return n0, n1


def ramanujan_sum(n: int, c: int) -> int:
    """Sum of e(n d / c) over d coprime to c: mu(c/g) phi(c) / phi(c/g)."""
    if c < 1:
        raise ValueError("ramanujan_sum expects c >= 1")
    g = gcd(n, c)
    cg = c // g
    mu = moebius(cg)
    if mu == 0:
        return 0
    # phi(c/g) divides phi(c) whenever c/g divides c, so this is exact
    return mu * (euler_phi(c) // euler_phi(cg))
