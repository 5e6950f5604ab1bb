"""Small-modulus number theory: factoring, totients, primitive roots,
discrete logs, CRT and the power congruence (n+1)^r == a (mod n^k)."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple


@dataclass(frozen=True)
class FactoredModulus:
    n: int
    factors: Tuple[Tuple[int, int], ...]

    def prime_powers(self) -> List[int]:
        return [p**a for p, a in self.factors]


@functools.lru_cache(maxsize=4096)
def factorize(n: int) -> FactoredModulus:
    if n < 1:
        raise ValueError("factorize expects n >= 1")
    m = n
    out = []
    p = 2
    while p * p <= m:
        if m % p == 0:
            a = 0
            while m % p == 0:
                m //= p
                a += 1
            out.append((p, a))
        p += 1 if p == 2 else 2
    if m > 1:
        out.append((m, 1))
    return FactoredModulus(n, tuple(out))


def euler_phi(n: int) -> int:
    phi = n
    for p, _ in factorize(n).factors:
        phi = phi // p * (p - 1)
    return phi


def carmichael(n: int) -> int:
    """Carmichael lambda: the exponent of the unit group mod n."""
    lam = 1
    for p, a in factorize(n).factors:
        if p == 2 and a >= 3:
            term = 2 ** (a - 2)
        else:
            term = p ** (a - 1) * (p - 1)
        lam = lam * term // math.gcd(lam, term)
    return lam


def mod_pow(base: int, exp: int, m: int) -> int:
    """base^exp mod m by left-to-right square and multiply."""
    if m < 1:
        raise ValueError("modulus must be >= 1")
    if exp < 0:
        raise ValueError("negative exponent")
    result = 1 % m
    base %= m
    for bit in bin(exp)[2:]:
        result = result * result % m
        if bit == "1":
            result = result * base % m
    return result


def multiplicative_order(g: int, m: int) -> int:
    if math.gcd(g, m) != 1:
        raise ValueError(f"{g} is not a unit mod {m}")
    if m == 1:
        return 1
    order = carmichael(m)
    for q, _ in factorize(order).factors:
        while order % q == 0 and pow(g, order // q, m) == 1:
            order //= q
    return order


@functools.lru_cache(maxsize=1024)
def primitive_root(p: int, k: int = 1) -> int:
    """Least primitive root of p^k for an odd prime p."""
    if p == 2:
        raise ValueError("primitive roots of powers of 2 are not supported")
    if k < 1 or factorize(p).factors != ((p, 1),):
        raise ValueError(f"expected an odd prime and k >= 1, got p={p}, k={k}")
    m = p**k
    phi = p ** (k - 1) * (p - 1)
    qs = [q for q, _ in factorize(phi).factors]
    for g in range(2, m):
        if g % p == 0:
            continue
        if all(pow(g, phi // q, m) != 1 for q in qs):
            return g
    raise ArithmeticError(f"no primitive root mod {m}")  # unreachable for odd p


def discrete_log(g: int, a: int, m: int) -> int:
    """Least t >= 0 with g^t == a (mod m), by baby-step giant-step.

    ``g`` is expected to generate the unit group mod the prime power ``m``.
    """
    a %= m
    if math.gcd(a, m) != 1:
        raise ValueError(f"{a} is not a unit mod {m}")
    if m == 1:
        return 0
    order = euler_phi(m)
    step = math.isqrt(order) + 1
    baby = {}
    cur = 1
    for j in range(step):
        baby.setdefault(cur, j)
        cur = cur * g % m
    giant = pow(g, -step, m)
    cur = a
    for i in range(step + 1):
        j = baby.get(cur)
        if j is not None:
            return i * step + j
        cur = cur * giant % m
    raise ValueError(f"{a} is not a power of {g} mod {m}")


def crt_solve(congruences: Sequence[Tuple[int, int]]) -> int:
    """Least x >= 0 with x == r_i (mod m_i); moduli must be pairwise coprime."""
    x, mod = 0, 1
    for r, m in congruences:
        if m < 1:
            raise ValueError("moduli must be positive")
        if math.gcd(mod, m) != 1:
            raise ValueError(f"moduli not coprime: {mod} and {m}")
        # x + mod*t == r (mod m)
        t = (r - x) * pow(mod, -1, m) % m
        x += mod * t
        mod *= m
    return x % mod


def solve_power_congruence(n: int, a: int, k: int) -> int:
    """Some r >= 1 with (n+1)^r == a (mod n^k), for odd n and a == 1 (mod n).

    Works one prime power p^(alpha*k) of n^k at a time: both discrete logs
    (of n+1 and of a) are multiples of phi(p^alpha), and after dividing them
    out the coefficient of r is prime to p, so each congruence is solvable
    mod p^(alpha*(k-1)); CRT glues them.  Returns the least residue the
    construction yields (or the full period when that residue is 0).
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if (a - 1) % n:
        raise ValueError(f"a={a} is not 1 mod {n}")
    congruences = []
    for p, alpha in factorize(n).factors:
        big = p ** (alpha * k)
        g = primitive_root(p, alpha * k)
        beta = discrete_log(g, n + 1, big)
        gamma = discrete_log(g, a, big)
        phi0 = p ** (alpha - 1) * (p - 1)
        assert beta % phi0 == 0 and gamma % phi0 == 0
        small = p ** (alpha * (k - 1))
        if small == 1:
            congruences.append((0, 1))
            continue
        coeff = (beta // phi0) % small
        congruences.append(((gamma // phi0) * pow(coeff, -1, small) % small, small))
    r = crt_solve(congruences)
    if r == 0:
        r = math.prod(m for _, m in congruences)
    return r


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n).factors == ((n, 1),)

