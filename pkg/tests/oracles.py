"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package: every value is recomputed from scratch
with plain loops over strings and integers.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def digits(n: int, b: int):
    if n == 0:
        return [0]
    out = []
    while n:
        out.append(n % b)
        n //= b
    return out


def digits_split(n: int, b: int):
    """Base-b digits (least significant first) by recursive halving, so
    numbers with tens of thousands of digits convert quickly."""
    if n < b**64:
        return digits(n, b)
    k = 64
    while b ** (2 * k) <= n:
        k *= 2
    hi, lo = divmod(n, b**k)
    low = digits_split(lo, b) if lo else [0]
    return low + [0] * (k - len(low)) + digits_split(hi, b)


def T_split(n: int, e: int, b: int) -> int:
    return sum(d**e for d in digits_split(n, b)) if n else 0


def T(n: int, e: int, b: int) -> int:
    return sum(d**e for d in digits(n, b)) if n else 0


def happy(n: int, e: int, b: int) -> bool:
    seen = set()
    while n != 1 and n not in seen:
        seen.add(n)
        n = T(n, e, b)
    return n == 1


@lru_cache(maxsize=None)
def happy_cached(n: int, e: int, b: int) -> bool:
    return happy(n, e, b)


def cycle_members(e: int, b: int, limit: int):
    """Every value lying on a cycle reached from [1, limit), by walking each
    trajectory until it repeats."""
    out = set()
    for n in range(1, limit):
        path, pos = [], {}
        x = n
        while x not in pos:
            pos[x] = len(path)
            path.append(x)
            x = T(x, e, b)
        out.update(path[pos[x]:])
    return sorted(out)


def least_run(e: int, b: int, m: int, bound: int):
    """Least s with s..s+m-1 happy and s+m-1 <= bound."""
    streak = 0
    for n in range(1, bound + 1):
        streak = streak + 1 if happy_cached(n, e, b) else 0
        if streak >= m:
            return n - m + 1
    return None


def all_runs(e: int, b: int, m: int, bound: int):
    """Every maximal run of length >= m inside [1, bound], as (start, length)."""
    out = []
    start = None
    for n in range(1, bound + 2):
        h = n <= bound and happy_cached(n, e, b)
        if h and start is None:
            start = n
        elif not h and start is not None:
            if n - start >= m:
                out.append((start, n - start))
            start = None
    return out


def happy_mask(e: int, b: int, bound: int) -> np.ndarray:
    """mask[n] for 0 <= n <= bound, using a per-digit vector loop (no block
    decomposition) and a naive table for small values."""
    n = np.arange(bound + 1, dtype=np.int64)
    t = np.zeros_like(n)
    x = n.copy()
    while x.any():
        t += (x % b) ** e
        x //= b
    values, inverse = np.unique(t, return_inverse=True)
    small = np.array([k > 0 and happy(int(k), e, b) for k in values], dtype=bool)
    mask = small[inverse.reshape(-1)]
    mask[0] = False
    return mask


def brute_crt(congruences, limit: int):
    return [x for x in range(limit) if all(x % m == r % m for r, m in congruences)]


def brute_order(g: int, m: int) -> int:
    k, x = 1, g % m
    while x != 1 % m:
        x = x * g % m
        k += 1
    return k


def brute_log(g: int, a: int, m: int):
    x = 1 % m
    for t in range(m):
        if x == a % m:
            return t
        x = x * g % m
    return None


def brute_power_solutions(n: int, a: int, k: int):
    """All r in [1, period] with (n+1)^r == a (mod n^k)."""
    mod = n**k
    period = brute_order(n + 1, mod)
    return [r for r in range(1, period + 1) if pow(n + 1, r, mod) == a % mod]
