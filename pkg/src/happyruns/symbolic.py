"""Run-length numerals whose run lengths may themselves be numerals.

A ``TowerNat`` is either a plain ``int`` or a :class:`Runs` value: base-b
digit runs ``(digit, count)`` listed least significant first, where each
``count`` is again a ``TowerNat``.  That is enough to write down numbers
with a googol of digits, or with a tower of such counts, and still take
digit power sums, residues and carry-free sums of them exactly.

Canonical form: counts below ``b**SMALL_DIGITS`` are ints, larger counts are
``Runs``; adjacent runs never share a digit; the top run's digit is nonzero.
Every constructor below goes through :func:`_make`, so two canonical values
are equal iff they are structurally equal.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from .core import Params, digits_of, power_digit_sum
from .numtheory import carmichael, factorize

SMALL_DIGITS = 256
DEFAULT_DEPTH_LIMIT = 8
DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"

_depth_limit = contextvars.ContextVar("tower_depth_limit", default=DEFAULT_DEPTH_LIMIT)


class DepthLimitExceeded(ValueError):
    pass


class NotRepresentable(ValueError):
    """The requested value has no run-length form we can compute exactly."""


@contextlib.contextmanager
def depth_limit(limit: int) -> Iterator[None]:
    token = _depth_limit.set(limit)
    try:
        yield
    finally:
        _depth_limit.reset(token)


def current_depth_limit() -> int:
    return _depth_limit.get()


@dataclass(frozen=True)
class Runs:
    base: int
    segments: Tuple[Tuple[int, "TowerNat"], ...]
    depth: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        b = self.base
        if b < 2:
            raise ValueError("base must be >= 2")
        if not self.segments:
            raise ValueError("Runs needs at least one segment; use 0 for zero")
        depth = 0
        prev = None
        for d, c in self.segments:
            if not 0 <= d < b:
                raise ValueError(f"digit {d} out of range for base {b}")
            if d == prev:
                raise ValueError("adjacent segments share a digit")
            prev = d
            if isinstance(c, Runs):
                if c.base != b:
                    raise ValueError("count uses a different base")
                depth = max(depth, c.depth)
            elif not isinstance(c, int) or c < 1:
                raise ValueError(f"run count must be >= 1, got {c!r}")
        if self.segments[-1][0] == 0:
            raise ValueError("most significant digit is zero")
        object.__setattr__(self, "depth", depth + 1)


TowerNat = Union[int, Runs]


def depth(t: TowerNat) -> int:
    return t.depth if isinstance(t, Runs) else 0


def _check_depth(*ts: TowerNat) -> None:
    limit = _depth_limit.get()
    for t in ts:
        if depth(t) > limit:
            raise DepthLimitExceeded(f"tower depth {depth(t)} exceeds limit {limit}")


def _small_limit(b: int) -> int:
    return _power(b, SMALL_DIGITS)


@functools.lru_cache(maxsize=None)
def _power(b: int, k: int) -> int:
    return b**k


def _ndigits(n: int, b: int) -> int:
    if n < 0:
        raise ValueError("negative")
    k = 1
    p = b
    while p <= n:
        p *= b
        k += 1
    return k


def _value_of(b: int, segs: Sequence[Tuple[int, int]]) -> int:
    v = 0
    for d, c in reversed(segs):
        p = b**c
        v = v * p + d * ((p - 1) // (b - 1))
    return v


def _bounded(t: TowerNat, limit: int) -> Optional[int]:
    """Exact value of t when t <= limit, else None."""
    if isinstance(t, int):
        return t if t <= limit else None
    b = t.base
    max_digits = _ndigits(limit, b)
    total = 0
    segs = []
    for d, c in t.segments:
        ci = _bounded(c, max_digits)
        if ci is None:
            return None
        total += ci
        if total > max_digits:
            return None
        segs.append((d, ci))
    v = _value_of(b, segs)
    return v if v <= limit else None


def _canon(t: TowerNat, b: int) -> TowerNat:
    if isinstance(t, int):
        if t < 0:
            raise ValueError("negative count")
        if t >= _small_limit(b):
            return _make(b, tn_from_natural(t, b).segments)
        return t
    v = _bounded(t, _small_limit(b) - 1)
    return t if v is None else v


def _make(b: int, segs) -> TowerNat:
    out: List[Tuple[int, TowerNat]] = []
    for d, c in segs:
        c = _canon(c, b)
        if c == 0:
            continue
        if out and out[-1][0] == d:
            out[-1] = (d, _canon(tn_add_full(out[-1][1], c), b))
        else:
            out.append((d, c))
    while out and out[-1][0] == 0:
        out.pop()
    if not out:
        return 0
    return Runs(b, tuple(out))


def _segments(t: TowerNat, b: int) -> List[Tuple[int, TowerNat]]:
    if isinstance(t, Runs):
        return list(t.segments)
    if t == 0:
        return []
    return list(tn_from_natural(t, b).segments)


# -- conversions ------------------------------------------------------------


def tn_from_natural(n: int, b: int) -> TowerNat:
    """Run-length form of n (0 stays the plain int 0)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0
    segs: List[List[int]] = []
    for d in digits_of(n, b):
        if segs and segs[-1][0] == d:
            segs[-1][1] += 1
        else:
            segs.append([d, 1])
    return Runs(b, tuple((d, c) for d, c in segs))


def tn_canonical(t: TowerNat, b: int) -> TowerNat:
    """Plain int when the value is small, otherwise the canonical Runs form
    (rebuilt all the way down, so hand-built values compare correctly)."""
    if isinstance(t, Runs):
        t = _make(b, [(d, tn_canonical(c, b)) for d, c in t.segments])
    return _canon(t, b)


def tn_equal(x: TowerNat, y: TowerNat, b: Optional[int] = None) -> bool:
    if isinstance(x, int) and isinstance(y, int):
        return x == y
    if b is None:
        b = x.base if isinstance(x, Runs) else y.base
    return _canon(x, b) == _canon(y, b)


def tn_value(t: TowerNat, digit_cap: int) -> Optional[int]:
    """The value as an int if it has at most ``digit_cap`` digits."""
    if isinstance(t, int):
        return t
    n = tn_digit_count_bounded(t, digit_cap)
    if n is None:
        return None
    return _value_of(t.base, [(d, _bounded(c, digit_cap)) for d, c in t.segments])


def tn_digit_count_bounded(t: TowerNat, cap: int, b: Optional[int] = None) -> Optional[int]:
    if isinstance(t, int):
        n = _ndigits(t, b or 10)
        return n if n <= cap else None
    total = 0
    for _, c in t.segments:
        ci = _bounded(c, cap)
        if ci is None:
            return None
        total += ci
        if total > cap:
            return None
    return total


def tn_digit_count(t: TowerNat, b: int) -> TowerNat:
    if isinstance(t, int):
        return _ndigits(t, b)
    total: TowerNat = 0
    for _, c in t.segments:
        total = tn_add_full(total, c)
    return _canon(total, b)


def tn_materialize(t: TowerNat, digit_cap: int, base: Optional[int] = None) -> Optional[str]:
    """Digit string, most significant first, or None when longer than the cap."""
    b = t.base if isinstance(t, Runs) else (base or 10)
    if b > len(DIGIT_CHARS):
        raise ValueError("materialize renders bases up to 36")
    if isinstance(t, int):
        s = "".join(DIGIT_CHARS[d] for d in reversed(digits_of(t, b)))
        return s if len(s) <= digit_cap else None
    if tn_digit_count_bounded(t, digit_cap) is None:
        return None
    return "".join(DIGIT_CHARS[d] * _bounded(c, digit_cap) for d, c in reversed(t.segments))


def tn_digits(t: TowerNat, digit_cap: int, base: Optional[int] = None) -> Optional[List[int]]:
    """Digits least significant first, or None when longer than the cap."""
    b = t.base if isinstance(t, Runs) else (base or 10)
    if isinstance(t, int):
        ds = digits_of(t, b)
        return ds if len(ds) <= digit_cap else None
    if tn_digit_count_bounded(t, digit_cap) is None:
        return None
    out: List[int] = []
    for d, c in t.segments:
        out.extend([d] * _bounded(c, digit_cap))
    return out


# -- comparison -------------------------------------------------------------


def tn_cmp(x: TowerNat, y: TowerNat, b: Optional[int] = None) -> int:
    """Three-way comparison.  Raises NotRepresentable for two unrelated deep
    towers whose order cannot be read off their shapes."""
    if isinstance(x, int) and isinstance(y, int):
        return (x > y) - (x < y)
    if b is None:
        b = x.base if isinstance(x, Runs) else y.base
    x, y = _canon(x, b), _canon(y, b)
    if x == y:
        return 0
    if isinstance(x, int) and isinstance(y, int):
        return (x > y) - (x < y)
    if isinstance(x, int):
        return -1
    if isinstance(y, int):
        return 1
    c = tn_cmp(tn_digit_count(x, b), tn_digit_count(y, b), b)
    if c:
        return c
    xs, ys = list(reversed(x.segments)), list(reversed(y.segments))
    i = 0
    while i < len(xs) and i < len(ys):
        (dx, cx), (dy, cy) = xs[i], ys[i]
        if dx != dy:
            return (dx > dy) - (dx < dy)
        c = tn_cmp(cx, cy, b)
        if c == 0:
            i += 1
            continue
        if c > 0:
            # x keeps digit dx where y has already moved to its next run
            nxt = ys[i + 1][0]
            return (dx > nxt) - (dx < nxt)
        nxt = xs[i + 1][0]
        return (nxt > dy) - (nxt < dy)
    return 0


def tn_cmp_int(t: TowerNat, n: int) -> int:
    if isinstance(t, int):
        return (t > n) - (t < n)
    v = _bounded(t, n)
    if v is None:
        return 1
    return (v > n) - (v < n)


# -- carrying arithmetic ----------------------------------------------------


def _take(c: TowerNat, k: int) -> int:
    """min(c, k) as an int."""
    return k if tn_cmp_int(c, k) > 0 else _bounded(c, k)


def tn_add_int(t: TowerNat, y: int) -> TowerNat:
    """t + y with full carry propagation (y a plain non-negative int)."""
    if y < 0:
        raise ValueError("y must be non-negative")
    if isinstance(t, int):
        return t + y
    b = t.base
    yd = digits_of(y, b) if y else []
    segs = list(t.segments)
    out: List[Tuple[int, TowerNat]] = []
    carry = 0
    i = 0
    idx = 0
    while idx < len(segs):
        d, c = segs[idx]
        if i >= len(yd) and not carry:
            out.extend(segs[idx:])
            break
        if i < len(yd):
            k = _take(c, len(yd) - i)
            for _ in range(k):
                carry, digit = divmod(d + yd[i] + carry, b)
                out.append((digit, 1))
                i += 1
            rest = tn_sub_int(c, k)
            if rest != 0:
                segs[idx] = (d, rest)
                continue
            idx += 1
            continue
        if d == b - 1:
            out.append((0, c))
        else:
            out.append((d + 1, 1))
            out.append((d, tn_sub_int(c, 1)))
            carry = 0
        idx += 1
    while i < len(yd):
        carry, digit = divmod(yd[i] + carry, b)
        out.append((digit, 1))
        i += 1
    if carry:
        out.append((carry, 1))
    return _make(b, out)


def tn_sub_int(t: TowerNat, y: int) -> TowerNat:
    """t - y for a plain int y <= t."""
    if y < 0:
        raise ValueError("y must be non-negative")
    if isinstance(t, int):
        if y > t:
            raise ValueError("subtraction would go negative")
        return t - y
    if y == 0:
        return t
    b = t.base
    yd = digits_of(y, b)
    segs = list(t.segments)
    out: List[Tuple[int, TowerNat]] = []
    borrow = 0
    i = 0
    idx = 0
    while idx < len(segs):
        d, c = segs[idx]
        if i >= len(yd) and not borrow:
            out.extend(segs[idx:])
            break
        if i < len(yd):
            k = _take(c, len(yd) - i)
            for _ in range(k):
                v = d - yd[i] - borrow
                borrow = 1 if v < 0 else 0
                out.append((v % b, 1))
                i += 1
            rest = tn_sub_int(c, k)
            if rest != 0:
                segs[idx] = (d, rest)
                continue
            idx += 1
            continue
        if d == 0:
            out.append((b - 1, c))
        else:
            out.append((d - 1, 1))
            out.append((d, tn_sub_int(c, 1)))
            borrow = 0
        idx += 1
    if borrow or i < len(yd):
        raise ValueError("subtraction would go negative")
    return _make(b, out)


def tn_sub(x: TowerNat, y: TowerNat, b: Optional[int] = None) -> TowerNat:
    """x - y for y <= x (ValueError otherwise)."""
    if isinstance(y, int):
        return tn_sub_int(x, y)
    if b is None:
        b = y.base
    y = _canon(y, b)
    if isinstance(y, int):
        return tn_sub_int(x, y)
    x = _canon(x, b)
    if isinstance(x, int):
        raise ValueError("subtraction would go negative")
    _check_depth(x, y)
    xs, ys = list(x.segments), list(y.segments)
    ix = iy = 0
    borrow = 0
    out: List[Tuple[int, TowerNat]] = []
    while ix < len(xs) and iy < len(ys):
        (dx, cx), (dy, cy) = xs[ix], ys[iy]
        c = tn_cmp(cx, cy, b)
        k = cx if c <= 0 else cy
        v = dx - dy - borrow
        borrow = 1 if v < 0 else 0
        out.append((v % b, 1))
        # after the first digit of an aligned block the borrow is constant
        out.append(((dx - dy - borrow) % b, tn_sub_int(k, 1)))
        if c <= 0:
            ix += 1
        else:
            xs[ix] = (dx, tn_sub(cx, cy, b))
        if c >= 0:
            iy += 1
        else:
            ys[iy] = (dy, tn_sub(cy, cx, b))
    if iy < len(ys):
        raise ValueError("subtraction would go negative")
    rest = xs[ix:]
    if rest:
        out.extend(_segments(tn_sub_int(_make(b, rest), borrow), b))
    elif borrow:
        raise ValueError("subtraction would go negative")
    return _make(b, out)


def tn_add_full(x: TowerNat, y: TowerNat) -> TowerNat:
    """Exact sum of two numerals of the same base."""
    _check_depth(x, y)
    if isinstance(x, int) and isinstance(y, int):
        return x + y
    if isinstance(x, int):
        return tn_add_int(y, x)
    if isinstance(y, int):
        return tn_add_int(x, y)
    if x.base != y.base:
        raise ValueError("bases differ")
    b = x.base
    xs, ys = list(x.segments), list(y.segments)
    ix = iy = 0
    carry = 0
    out: List[Tuple[int, TowerNat]] = []
    while ix < len(xs) and iy < len(ys):
        (dx, cx), (dy, cy) = xs[ix], ys[iy]
        c = tn_cmp(cx, cy, b)
        k = cx if c <= 0 else cy
        s = dx + dy
        c1, first = divmod(s + carry, b)
        out.append((first, 1))
        out.append(((s + c1) % b, tn_sub_int(k, 1)))
        carry = c1
        if c <= 0:
            ix += 1
        else:
            xs[ix] = (dx, tn_sub(cx, cy, b))
        if c >= 0:
            iy += 1
        else:
            ys[iy] = (dy, tn_sub(cy, cx, b))
    rest = xs[ix:] or ys[iy:]
    if rest:
        out.extend(_segments(tn_add_int(_make(b, rest), carry), b))
    elif carry:
        out.append((carry, 1))
    return _make(b, out)


def tn_scale_small(t: TowerNat, c: int) -> TowerNat:
    """t * c for a small non-negative int c.

    Inside a run the carry settles after a few digits, so every run of the
    input becomes a short transient plus one run of the product.
    """
    _check_depth(t)
    if c < 0:
        raise ValueError("c must be non-negative")
    if isinstance(t, int):
        return t * c
    b = t.base
    out: List[Tuple[int, TowerNat]] = []
    carry = 0
    for d, cnt in t.segments:
        remaining = cnt
        while remaining != 0:
            carry_next, digit = divmod(d * c + carry, b)
            if carry_next == carry:
                out.append((digit, remaining))
                break
            out.append((digit, 1))
            carry = carry_next
            remaining = tn_sub_int(remaining, 1)
    while carry:
        carry, digit = divmod(carry, b)
        out.append((digit, 1))
    return _make(b, out)


# -- padding and shifting ---------------------------------------------------


def tn_pad_run(d: int, s: TowerNat, count: TowerNat, b: int) -> TowerNat:
    """``count`` copies of digit d followed by s zeros."""
    if not 1 <= d < b:
        raise ValueError(f"pad digit must be in [1, {b}), got {d}")
    if count == 0 or (isinstance(count, int) and count < 0):
        raise ValueError("pad count must be >= 1")
    return _make(b, [(0, s), (d, count)])


def tn_pad_ones(s: TowerNat, count: TowerNat, b: int) -> TowerNat:
    return tn_pad_run(1, s, count, b)


def tn_shift(t: TowerNat, k: TowerNat, b: int) -> TowerNat:
    """t * b^k (append k zero digits)."""
    if t == 0:
        return 0
    if isinstance(t, int) and isinstance(k, int) and _ndigits(t, b) + k <= SMALL_DIGITS:
        return t * b**k
    return _make(b, [(0, k)] + _segments(t, b))


def _low_zero_run(t: Runs) -> TowerNat:
    d, c = t.segments[0]
    return c if d == 0 else 0


def tn_add_small(t: TowerNat, y: int, s: TowerNat, b: Optional[int] = None) -> TowerNat:
    """Carry-free t + y: requires y < b^s and the low s digits of t zero."""
    if y < 0:
        raise ValueError("y must be non-negative")
    return tn_add_disjoint(t, y, shift=s, b=b)


def tn_add_disjoint(t: TowerNat, y: TowerNat, shift: Optional[TowerNat] = None,
                    b: Optional[int] = None) -> TowerNat:
    """Digit-disjoint sum t + y.

    The low digits of t must be zero across at least ``shift`` positions
    (default: the digit count of y), and y must fit in ``shift`` digits.
    Raises ValueError when that does not hold; this never carries.
    """
    if b is None:
        b = t.base if isinstance(t, Runs) else (y.base if isinstance(y, Runs) else None)
    if b is None:
        raise ValueError("base unknown for two plain ints; pass b")
    if y == 0:
        if shift is not None and _low_zeros_cmp(t, shift, b) < 0:
            raise ValueError("low digits of t are not zero across the shift")
        return t
    ny = tn_digit_count(y, b)
    if shift is None:
        shift = ny
    if tn_cmp(ny, shift, b) > 0:
        raise ValueError("addend does not fit below the shift")
    if _low_zeros_cmp(t, shift, b) < 0:
        raise ValueError("low digits of t are not zero across the shift")
    if t == 0:
        return y
    tsegs = _segments(t, b)
    zeros = tsegs[0][1]
    return _make(b, _segments(y, b) + [(0, tn_sub(zeros, ny, b))] + tsegs[1:])


def _low_zeros_cmp(t: TowerNat, s: TowerNat, b: int) -> int:
    """Compare the number of trailing zero digits of t with s."""
    if t == 0:
        return 1
    segs = _segments(t, b)
    z = segs[0][1] if segs[0][0] == 0 else 0
    return tn_cmp(z, s, b)


# -- digit power sums and residues ------------------------------------------


def tn_power_digit_sum(t: TowerNat, params: Params) -> TowerNat:
    """T applied to a numeral: each run (d, c) contributes d^e * c."""
    _check_depth(t)
    if isinstance(t, int):
        return power_digit_sum(t, params)
    if t.base != params.b:
        raise ValueError("numeral base differs from params")
    total: TowerNat = 0
    for d, c in t.segments:
        if d:
            total = tn_add_full(total, tn_scale_small(c, d**params.e))
    return _canon(total, params.b)


def _pow_base_mod(b: int, c: TowerNat, n: int) -> int:
    """b^c mod n for a numeral exponent c."""
    if n == 1:
        return 0
    if isinstance(c, int):
        return pow(b, c, n)
    lam = carmichael(n)
    mu = max(a for _, a in factorize(n).factors)
    small = _bounded(c, mu + lam)
    if small is not None:
        return pow(b, small, n)
    r = tn_mod(c, lam)
    return pow(b, mu + (r - mu) % lam, n)


def tn_mod(t: TowerNat, m: int) -> int:
    """value(t) mod m.

    A run of digit d with count c sitting above position p contributes
    d * (b^c - 1)/(b - 1) * b^p.  The repunit part is read off b^c mod
    m*(b-1); exponents that are themselves numerals are reduced mod the
    Carmichael function, which is valid once they exceed the largest prime
    multiplicity of the modulus.
    """
    _check_depth(t)
    if m < 1:
        raise ValueError("modulus must be >= 1")
    if isinstance(t, int):
        return t % m
    if m == 1:
        return 0
    b = t.base
    n = m * (b - 1)
    acc = 0
    place = 1 % m
    for d, c in t.segments:
        x = _pow_base_mod(b, c, n)
        if d:
            repunit = ((x - 1) % n) // (b - 1)
            acc = (acc + d * repunit * place) % m
        place = place * x % m
    return acc


# -- serialization ----------------------------------------------------------


def tn_to_json(t: TowerNat):
    if isinstance(t, int):
        return {"small": t}
    return {"base": t.base, "runs": [[d, tn_to_json(c)] for d, c in t.segments]}


def tn_from_json(obj) -> TowerNat:
    if "small" in obj:
        v = obj["small"]
        if not isinstance(v, int) or v < 0:
            raise ValueError(f"bad small node {v!r}")
        return v
    b = int(obj["base"])
    return Runs(b, tuple((int(d), tn_from_json(c)) for d, c in obj["runs"]))


def tn_repr(t: TowerNat, cap: int = 40) -> str:
    """Short human-readable rendering, e.g. ``9^(233192) 2 0 9 5 8``."""
    if isinstance(t, int):
        return str(t)
    parts = []
    for d, c in reversed(t.segments):
        v = _bounded(c, 10**cap)
        if v == 1:
            parts.append(DIGIT_CHARS[d] if d < 36 else f"<{d}>")
        else:
            inner = str(v) if v is not None else "(" + tn_repr(c, cap) + ")"
            parts.append(f"{d}^{inner}")
    return " ".join(parts) + f" [base {t.base}]"
