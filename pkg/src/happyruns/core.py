"""The digit power-sum map and everything that only needs small integers.

``T(n)`` is the sum of the e-th powers of the base-b digits of ``n``.  A
positive integer is *happy* when iterating ``T`` reaches 1.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

# Largest classification table we are willing to allocate (entries).
MAX_TABLE = 1 << 27


@dataclass(frozen=True)
class Params:
    e: int
    b: int

    def __post_init__(self) -> None:
        if not isinstance(self.e, int) or not isinstance(self.b, int):
            raise TypeError("e and b must be integers")
        if self.e < 1:
            raise ValueError(f"exponent must be >= 1, got e={self.e}")
        if self.b < 2:
            raise ValueError(f"base must be >= 2, got b={self.b}")

    @property
    def modulus(self) -> int:
        """(b-1)^e, the modulus residue witnesses are lifted to."""
        return (self.b - 1) ** self.e

    def to_json(self) -> dict:
        return {"e": self.e, "b": self.b}

    @classmethod
    def from_json(cls, obj: dict) -> "Params":
        return cls(int(obj["e"]), int(obj["b"]))


def digits_of(n: int, b: int) -> List[int]:
    """Base-b digits of n, least significant first ([0] for n == 0)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if b < 2:
        raise ValueError("base must be >= 2")
    if n == 0:
        return [0]
    out = []
    while n:
        n, d = divmod(n, b)
        out.append(d)
    return out


def power_digit_sum(n: int, params: Params) -> int:
    if n < 1:
        raise ValueError("T is defined on positive integers")
    e, b = params.e, params.b
    total = 0
    while n:
        n, d = divmod(n, b)
        total += d**e
    return total


def _t(n: int, e: int, b: int) -> int:
    # unchecked variant for hot loops; T(0) = 0
    total = 0
    while n:
        n, d = divmod(n, b)
        total += d**e
    return total


def t_bound(n: int, params: Params) -> int:
    """(b-1)^e * (number of base-b digits of n); T(n) never exceeds this."""
    return params.modulus * len(digits_of(n, params.b))


@dataclass(frozen=True)
class Trajectory:
    start: int
    steps: List[int]
    reached_one: bool
    # value that repeated when a non-trivial cycle was entered
    cycle_entry: Optional[int] = None

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def terminal(self) -> str:
        return "ReachedOne" if self.reached_one else "EnteredCycle"

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "steps": list(self.steps),
            "terminal": self.terminal,
            "cycle_entry": self.cycle_entry,
            "length": self.length,
        }


def trajectory(n: int, params: Params) -> Trajectory:
    """Iterate T from n until 1 appears or a value repeats.

    The repeated value is kept as the last step so the closing edge of the
    cycle is visible.
    """
    if n < 1:
        raise ValueError("trajectory starts at a positive integer")
    if n == 1:
        return Trajectory(1, [], True)
    seen = {n}
    steps = []
    x = n
    while True:
        x = power_digit_sum(x, params)
        steps.append(x)
        if x == 1:
            return Trajectory(n, steps, True)
        if x in seen:
            return Trajectory(n, steps, False, cycle_entry=x)
        seen.add(x)


@functools.lru_cache(maxsize=None)
def contraction_bound(params: Params) -> int:
    """Least B = b^k (k >= 1) with (b-1)^e (k+1) < b^k.

    For n >= B we have T(n) < n, and T maps [1, B) into itself.
    """
    c = params.modulus
    k = 1
    while c * (k + 1) >= params.b**k:
        k += 1
    return params.b**k


def t_array(values: np.ndarray, params: Params) -> np.ndarray:
    """Vectorised T over a non-negative int64 array (T(0) = 0)."""
    b = params.b
    powers = np.arange(b, dtype=np.int64) ** params.e
    x = np.asarray(values, dtype=np.int64).copy()
    out = np.zeros_like(x)
    while True:
        nz = x > 0
        if not nz.any():
            return out
        out += powers[x % b]
        x //= b


def t_table(cap: int, params: Params) -> np.ndarray:
    """T(n) for every n in [0, cap)."""
    return t_array(np.arange(cap, dtype=np.int64), params)


@dataclass
class ClassifierCache:
    """Happy/unhappy verdict for every n below ``cap``.

    The table is built eagerly and then frozen, so one instance can be shared
    by any number of readers.
    """

    params: Params
    cap: int = 0
    table: np.ndarray = field(init=False, repr=False)
    cycle_members: List[int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        bound = contraction_bound(self.params)
        self.cap = max(int(self.cap), bound)
        if self.cap > MAX_TABLE:
            raise ValueError(
                f"classification table of {self.cap} entries exceeds MAX_TABLE; "
                "exponent/base too large for exhaustive tables"
            )
        self.table, self.cycle_members = _classify(self.cap, self.params)
        self.table.flags.writeable = False

    def is_happy(self, n: int) -> bool:
        if n < 1:
            raise ValueError("happiness is defined on positive integers")
        e, b = self.params.e, self.params.b
        while n >= self.cap:
            n = _t(n, e, b)
        return bool(self.table[n])


def _classify(cap: int, params: Params):
    """Classify [1, cap) by pointer doubling on the functional graph of T.

    After enough squarings F = T^(2^j) sends every node onto a cycle; we stop
    as soon as T permutes the image of F.  A node is happy iff its image is 1,
    the only cycle through 1 being the fixed point.
    """
    t = t_table(cap, params)
    t[0] = 0
    f = t.copy()
    while True:
        image = np.unique(f[1:])
        if np.array_equal(np.unique(t[image]), image):
            break
        f = f[f]
    table = f == 1
    table[0] = False
    return table, [int(v) for v in image]


@functools.lru_cache(maxsize=32)
def get_cache(params: Params, cap: int = 0) -> ClassifierCache:
    return ClassifierCache(params, cap)


def is_happy(n: int, params: Params, cache: Optional[ClassifierCache] = None) -> bool:
    if cache is None:
        cache = get_cache(params)
    return cache.is_happy(n)


@dataclass(frozen=True)
class CycleSet:
    params: Params
    members: tuple
    contraction_bound: int

    def __contains__(self, x: int) -> bool:
        return x in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def orbit(self, x: int) -> List[int]:
        """The cycle through member x, starting and ending at x."""
        if x not in self.members:
            raise ValueError(f"{x} is not in the cycle set")
        out = [x]
        y = power_digit_sum(x, self.params)
        while y != x:
            out.append(y)
            y = power_digit_sum(y, self.params)
        out.append(x)
        return out

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "members": list(self.members),
            "contraction_bound": self.contraction_bound,
        }


def cycle_set(params: Params) -> CycleSet:
    cache = get_cache(params)
    return CycleSet(params, tuple(sorted(cache.cycle_members)), contraction_bound(params))


def steps_into(values: Sequence[int], members, params: Params, minimum: int = 0) -> int:
    """Least r >= minimum with T^r(v) in ``members`` for every v."""
    members = set(members)
    current = list(values)
    r = 0
    while r < minimum or not all(v in members for v in current):
        current = [_t(v, params.e, params.b) for v in current]
        r += 1
    return r


def iterate(n: int, r: int, params: Params) -> int:
    for _ in range(r):
        n = _t(n, params.e, params.b)
    return n


def prime_factors(n: int) -> List[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class Condition:
    """Outcome of the consecutive-happy condition check for (e, b)."""

    holds: bool
    prime: Optional[int] = None

    def __bool__(self) -> bool:
        return self.holds


def condition_holds(params: Params) -> Condition:
    """True iff no prime p | b-1 has e == 1 (mod p-1).

    When it fails, the least failing prime is reported; every happy number is
    then 1 mod that prime, which rules out two consecutive happy numbers.
    """
    for p in prime_factors(params.b - 1):
        if (params.e - 1) % (p - 1) == 0:
            return Condition(False, p)
    return Condition(True)


def residue_invariance_witness(params: Params, p: int, sample_limit: int) -> bool:
    """Check T(n) == n (mod p) for all n in [1, sample_limit]."""
    if p < 2 or prime_factors(p) != [p]:
        raise ValueError(f"{p} is not prime")
    if (params.b - 1) % p:
        raise ValueError(f"{p} does not divide b-1 = {params.b - 1}")
    if (params.e - 1) % (p - 1):
        raise ValueError(f"e={params.e} is not 1 mod {p - 1}")
    n = np.arange(1, sample_limit + 1, dtype=np.int64)
    return bool(np.all((t_array(n, params) - n) % p == 0))
