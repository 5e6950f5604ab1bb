"""Constructive witnesses for long happy runs, emitted as certificates.

The chain, from the goal down:

* :func:`run_witness` pads a cover witness so that l+1, ..., l+m all map
  after r steps onto (cover h) + (member of a small set).
* :func:`cover_witness` finds h with h + y happy for all y in a set S,
  shrinking S by one element at a time with pair witnesses.
* :func:`pair_witness` finds l with l and l + x happy: l is b^s - x under a
  run of digits b-1, so l + x carries all the way up to a power of b.
* :func:`lift_residue_witness` turns a happy number in a class mod b-1 into
  one in the matching class mod (b-1)^e.
* :func:`residue_witness` builds a happy number in any class mod b-1 by
  walking the residue map :func:`lmap` down to 1.

Every provider tries a bounded search first and only builds when that
fails, unless ``Strategy.construct_only`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .certificate import (
    CertificateBuilder,
    WitnessCertificate,
    cover_claim,
    happy_claim,
    residue_claim,
    run_claim,
    shift_claim,
    _key,
)
from .core import (
    Params,
    condition_holds,
    cycle_set,
    iterate,
    power_digit_sum,
    steps_into,
)
from .numtheory import crt_solve, euler_phi, factorize, primitive_root, solve_power_congruence
from .search import find_cover_h, find_happy_in_residue, find_pair_h
from .symbolic import (
    NotRepresentable,
    Runs,
    TowerNat,
    tn_add_disjoint,
    tn_add_int,
    tn_canonical,
    tn_cmp,
    tn_cmp_int,
    tn_digit_count,
    tn_mod,
    tn_pad_ones,
    tn_pad_run,
    tn_power_digit_sum,
    tn_shift,
    tn_sub_int,
    tn_to_json,
    tn_value,
)


class ConditionFailure(ValueError):
    """The parameters admit no two consecutive happy numbers."""

    def __init__(self, params: Params, prime: int) -> None:
        super().__init__(f"condition fails for e={params.e}, b={params.b}: p={prime}")
        self.params = params
        self.prime = prime


@dataclass(frozen=True)
class Strategy:
    construct_only: bool = False
    # upper end of every bounded search attempt
    search_bound: int = 10**6
    # largest digit count we materialize when a construction needs a real int
    digit_cap: int = 20000


DEFAULT_STRATEGY = Strategy()


@dataclass(frozen=True)
class Witness:
    value: TowerNat
    step: int


def _require_condition(params: Params) -> None:
    cond = condition_holds(params)
    if not cond:
        raise ConditionFailure(params, cond.prime)


def _small(t: TowerNat, b: int) -> TowerNat:
    return tn_canonical(t, b) if isinstance(t, Runs) else t


def _plus(t: TowerNat, k: int, b: int) -> TowerNat:
    return _small(tn_add_int(t, k), b)


def _T(t: TowerNat, params: Params) -> TowerNat:
    if t == 0:
        return 0
    return _small(tn_power_digit_sum(t, params), params.b)


def _digits_to_clear(y: TowerNat, b: int) -> TowerNat:
    """Least s with b^s > y (as a count)."""
    if y == 0:
        return 0
    if isinstance(y, int):
        s = 0
        while b**s <= y:
            s += 1
        return s
    return tn_digit_count(y, b)


def _find(cb: CertificateBuilder, claim: dict) -> int:
    sid = cb._by_claim.get(_key(claim))
    if sid is None:
        raise KeyError(f"no step proves {claim}")
    return sid


# -- the residue map --------------------------------------------------------


def _coordinates(params: Params) -> List[Tuple[int, int]]:
    """(prime power p^alpha, least primitive root) for each factor of b-1."""
    out = []
    for p, alpha in factorize(params.b - 1).factors:
        out.append((p**alpha, primitive_root(p, alpha)))
    return out


def lmap(a: int, params: Params) -> int:
    """One step of the residue map mod b-1.

    Coordinate-wise mod p^alpha: a -> a - g + g^e with g the least primitive
    root, except that coordinates already at 1 stay at 1.
    """
    _require_condition(params)
    m = params.b - 1
    if not 0 <= a <= m:
        raise ValueError(f"residue must lie in [0, {m}], got {a}")
    congruences = []
    for q, g in _coordinates(params):
        if a % q == 1 % q:
            congruences.append((1 % q, q))
        else:
            congruences.append(((a - g + g**params.e) % q, q))
    return crt_solve(congruences)


def combined_root(a: int, params: Params) -> int:
    """g == primitive root where a is not 1, and == 1 where it is (mod b-1)."""
    congruences = []
    for q, g in _coordinates(params):
        congruences.append((1 % q if a % q == 1 % q else g % q, q))
    return crt_solve(congruences)


@dataclass(frozen=True)
class LMapState:
    params: Params
    roots: Tuple[int, ...]
    a: int
    orbit: Tuple[int, ...]
    r_a: int


def lmap_orbit(a: int, params: Params) -> LMapState:
    """Iterate :func:`lmap` from a until the residue is 1 mod b-1."""
    _require_condition(params)
    m = params.b - 1
    orbit = [a]
    x = a
    while (x - 1) % m:
        x = lmap(x, params)
        orbit.append(x)
        if len(orbit) > m + 1:
            raise ArithmeticError("residue map failed to reach 1")  # excluded by the condition
    roots = tuple(g for _, g in _coordinates(params))
    return LMapState(params, roots, a, tuple(orbit), len(orbit) - 1)


# -- small building blocks --------------------------------------------------


def inflate_happy(h: TowerNat, params: Params, min_value: int,
                  modulus: Optional[int] = None) -> Tuple[TowerNat, int]:
    """(h * b^t, t) for the least multiple t of phi(modulus) reaching min_value.

    Appending zeros leaves T unchanged, and b^phi(M) == 1 (mod M), so the
    result is happy exactly when h is and keeps its residue mod M.
    """
    b = params.b
    if modulus is None:
        modulus = params.modulus
    if tn_cmp_int(h, min_value) >= 0:
        return h, 0
    step = euler_phi(modulus)
    t = 0
    v = h
    while tn_cmp_int(v, min_value) < 0:
        t += step
        v = tn_shift(h, t, b)
    return _small(v, b), t


def _inflate(w: Witness, params: Params, min_value: int, modulus: int,
             cb: CertificateBuilder) -> Witness:
    v, t = inflate_happy(w.value, params, min_value, modulus)
    if t == 0:
        return w
    sid = cb.add("shift-zeros", happy_claim(v), [w.step], t=tn_to_json(t))
    return Witness(v, sid)


def _searched(cb: CertificateBuilder, n: int) -> Witness:
    return Witness(n, cb.happy_leaf(n))


# -- residue witnesses ------------------------------------------------------


def residue_step(l: Witness, hprime: TowerNat, params: Params,
                 cb: CertificateBuilder) -> Witness:
    """From happy l with l == T(h') (mod b-1), a happy h == h' (mod b-1).

    h is l - T(h') ones above h', so T(h) = l exactly (h = h' when l equals
    T(h')); l is first inflated up to T(h') when needed.
    """
    b, m = params.b, params.b - 1
    th = _T(hprime, params)
    if not isinstance(th, int):
        raise NotRepresentable("T(h') must be a small integer")
    if tn_mod(l.value, m) != th % m:
        raise ValueError("l and T(h') lie in different classes mod b-1")
    l = _inflate(l, params, th, m, cb)
    count = tn_sub_int(l.value, th)
    s = _digits_to_clear(hprime, b)
    if count == 0:
        h = _small(hprime, b)
    else:
        h = _small(tn_add_disjoint(tn_pad_ones(s, count, b), hprime, shift=s, b=b), b)
    sid = cb.add("pad", happy_claim(h), [l.step], digit=1, shift=tn_to_json(s),
                 count=tn_to_json(count), low=tn_to_json(hprime))
    cb.add("congruence", residue_claim(h, m, tn_mod(hprime, m)))
    return Witness(h, sid)


def residue_seed(a: int, params: Params) -> int:
    """The numeral g + (ones at positions 1..a+b-1-g) used to step from a."""
    b = params.b
    g = combined_root(a, params)
    ones = a + b - 1 - g
    return g + b * (b**ones - 1) // (b - 1)


def residue_witness(a: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                    cb: Optional[CertificateBuilder] = None) -> Witness:
    """A happy number == a (mod b-1); its step proves happiness and a
    congruence step records the class."""
    cb = cb or CertificateBuilder(params)
    b = params.b
    m = b - 1
    a %= m
    if not strategy.construct_only:
        h = find_happy_in_residue(a, m, params, strategy.search_bound)
        if h is not None:
            w = _searched(cb, h)
            cb.add("congruence", residue_claim(h, m, a))
            return w
    if (a - 1) % m == 0:
        w = _searched(cb, 1)
        cb.add("congruence", residue_claim(1, m, a))
        return w
    _require_condition(params)
    inner = residue_witness(lmap(a, params), params, strategy, cb)
    return residue_step(inner, residue_seed(a, params), params, cb)


def lift_residue_witness(a: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                         cb: Optional[CertificateBuilder] = None) -> Witness:
    """A happy number == a (mod (b-1)^e).

    From happy h == a (mod b-1) build (h-1 ones at positions 1..h-1) plus
    b^(h+r); its digit power sum is h, and r is chosen with the power
    congruence solver so the whole numeral lands on a mod (b-1)^e.
    """
    cb = cb or CertificateBuilder(params)
    b, e = params.b, params.e
    n = b - 1
    q = params.modulus
    a %= q
    if not strategy.construct_only:
        h = find_happy_in_residue(a, q, params, strategy.search_bound)
        if h is not None:
            w = _searched(cb, h)
            cb.add("congruence", residue_claim(h, q, a))
            return w
    base = residue_witness(a % n, params, strategy, cb)
    if q == n:
        return base
    h = base.value
    ones = tn_pad_ones(1, tn_sub_int(h, 1), b) if tn_cmp_int(h, 1) > 0 else 0
    acc = tn_mod(ones, q)
    k1_times_n = (acc - a + 1) % q
    if k1_times_n % n:
        raise ArithmeticError("pad residue is not aligned with a mod b-1")
    k1 = k1_times_n // n
    bh = tn_mod(tn_shift(1, h, b), q)
    target = pow(bh, -1, q) * (1 - k1 * n) % q
    r = solve_power_congruence(n, target, e)
    top = _plus(h, r, b)
    value = _small(tn_add_disjoint(tn_shift(1, top, b), ones, shift=top, b=b), b)
    if tn_mod(value, q) != a:
        raise ArithmeticError("lifted witness landed in the wrong class")
    sid = cb.add("pad", happy_claim(value), [base.step], digit=1, shift=tn_to_json(top),
                 count=tn_to_json(1), low=tn_to_json(ones))
    cb.add("congruence", residue_claim(value, q, a))
    return Witness(value, sid)


# -- pairs and covers -------------------------------------------------------


def _division_witness(target: int, params: Params, strategy: Strategy,
                      cb: CertificateBuilder) -> Tuple[Witness, int]:
    """A happy witness == target (mod (b-1)^e) as a plain int.

    The constructed witness is used when it materializes within the digit
    cap; otherwise a searched one stands in, since splitting a numeral into
    whole multiples of (b-1)^e needs its exact value.
    """
    q = params.modulus
    w = lift_residue_witness(target, params, strategy, cb)
    v = tn_value(w.value, strategy.digit_cap)
    if v is not None:
        return w, v
    bound = max(strategy.search_bound, 10**7)
    h = find_happy_in_residue(target % q, q, params, bound)
    if h is None:
        raise NotRepresentable("lifted witness too large to divide and none found by search")
    w = _searched(cb, h)
    cb.add("congruence", residue_claim(h, q, target))
    return w, h


def pair_witness(x: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                 cb: Optional[CertificateBuilder] = None) -> Witness:
    """l with both l and l + x happy; the step proves cover(l, {0, x})."""
    if x < 1:
        raise ValueError("x must be >= 1")
    cb = cb or CertificateBuilder(params)
    b, e = params.b, params.e
    q = params.modulus
    if not strategy.construct_only:
        l = find_pair_h(params, x, strategy.search_bound)
        if l is not None:
            p0, p1 = cb.happy_leaf(l), cb.happy_leaf(l + x)
            return Witness(l, cb.add("cover-base", cover_claim(l, [0, x]), [p0, p1]))
    s = _digits_to_clear(x, b)
    xstar = b**s - x
    tx = power_digit_sum(xstar, params)
    hw, hv = _division_witness(tx, params, strategy, cb)
    hw = _inflate(hw, params, tx + 1, q, cb)
    hv = tn_value(hw.value, strategy.digit_cap + 10**4)
    if hv is None:
        raise NotRepresentable("inflated witness does not materialize")
    k, rem = divmod(hv - tx, q)
    if rem:
        raise ArithmeticError("witness is not == T(x*) mod (b-1)^e")
    k = _small(k, b)
    l = _small(tn_add_disjoint(tn_pad_run(b - 1, s, k, b), xstar, shift=s, b=b), b)
    happy_l = cb.add("pad", happy_claim(l), [hw.step], digit=b - 1, shift=tn_to_json(s),
                     count=tn_to_json(k), low=tn_to_json(xstar))
    top = tn_shift(1, _plus(k, s, b) if isinstance(k, Runs) else k + s, b)
    happy_top = cb.add("carry", happy_claim(top), [], l=tn_to_json(l), x=x, s=s,
                       k=tn_to_json(k))
    sid = cb.add("cover-base", cover_claim(l, [0, x]), [happy_l, happy_top])
    return Witness(l, sid)


def pad_shift(x: TowerNat, r: int, params: Params, m: Optional[int] = None,
              ys: Optional[Sequence[TowerNat]] = None) -> Tuple[TowerNat, List]:
    """l with T^r(l + y) = x + T^r(y) for every y in 0..m (or in ys).

    l is r nested one-pads: the innermost is x ones above enough zeros to
    clear the r-th image of the y's, and each outer pad has as many ones as
    the value of the pad inside it.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if x == 0 or (isinstance(x, int) and x < 0):
        raise ValueError("x must be >= 1")
    b = params.b
    shifts: List = []
    if ys is None:
        if m is None or m < 0:
            raise ValueError("give m >= 0 or an explicit set")
        bound = m
        for _ in range(r):
            s = _digits_to_clear(bound, b)
            shifts.append(s)
            bound = max(power_digit_sum(y, params) if y else 0 for y in range(bound + 1))
    else:
        level = list(ys)
        for _ in range(r):
            s: TowerNat = 0
            for y in level:
                d = _digits_to_clear(y, b)
                if tn_cmp(d, s, b) > 0:
                    s = d
            shifts.append(s)
            level = [_T(y, params) for y in level]
    cur = x
    for s in reversed(shifts):
        cur = _small(tn_pad_ones(s, cur, b), b)
    return cur, shifts


def _emit_shift(x: TowerNat, r: int, params: Params, cb: CertificateBuilder,
                m: Optional[int] = None, ys: Optional[Sequence[TowerNat]] = None) -> Witness:
    l, _ = pad_shift(x, r, params, m=m, ys=ys)
    return Witness(l, cb.add("pad-shift", shift_claim(l, r, x, m=m, ys=ys)))


def _merge_steps(values: Sequence[TowerNat], x_index: int, members, params: Params,
                 limit: int = 10_000) -> int:
    """Least r >= 1 putting every value in ``members`` and value[0], value[x_index] at 1."""
    cur = list(values)
    for r in range(1, limit + 1):
        cur = [_T(v, params) for v in cur]
        if cur[0] == 1 and cur[x_index] == 1 and all(isinstance(v, int) and v in members for v in cur):
            return r
    raise ArithmeticError("pair values never reach 1 together")


def cover_witness(members: Iterable[int], params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                  cb: Optional[CertificateBuilder] = None) -> Witness:
    """h with h + y happy for every y in ``members`` (which must contain 1
    when a construction is needed)."""
    cb = cb or CertificateBuilder(params)
    S = sorted(set(int(y) for y in members))
    b = params.b
    if not strategy.construct_only:
        h = find_cover_h(params, S, strategy.search_bound)
        if h is not None:
            prem = [cb.happy_leaf(h + y) for y in S]
            return Witness(h, cb.add("cover-base", cover_claim(h, S), prem))
    if 1 not in S or S[0] < 1:
        raise ValueError("constructed covers need 1 in a set of positive members")
    if S == [1]:
        h = b - 1 if b > 2 else 1
        return Witness(h, cb.add("cover-base", cover_claim(h, S), [cb.happy_leaf(h + 1)]))
    if len(S) == 2:
        x = S[1]
        pair = pair_witness(x - 1, params, strategy, cb)
        h = _small(tn_sub_int(pair.value, 1), b)
        prem = [_find(cb, happy_claim(pair.value)),
                _find(cb, happy_claim(_plus(pair.value, x - 1, b)))]
        return Witness(h, cb.add("cover-base", cover_claim(h, S), prem))
    D = set(cycle_set(params).members)
    x = min(y for y in S if y != 1)
    pair = cover_witness([1, x], params, strategy, cb)
    h0 = pair.value
    values = [_plus(h0, y, b) for y in S]
    r = _merge_steps(values, S.index(x), D, params)
    reduced = sorted(set(iterate(v, r, params) if isinstance(v, int) else _iter_tn(v, r, params)
                         for v in values))
    inner = cover_witness(reduced, params, strategy, cb)
    shift = _emit_shift(inner.value, r, params, cb, ys=values)
    h = _small(tn_add_disjoint(shift.value, h0, b=b), b)
    sid = cb.add("cover-step", cover_claim(h, S), [shift.step, inner.step, pair.step],
                 h0=tn_to_json(h0), r=r, x=x)
    return Witness(h, sid)


def _iter_tn(v: TowerNat, r: int, params: Params) -> int:
    for _ in range(r):
        v = _T(v, params)
    if not isinstance(v, int):
        raise ArithmeticError("iterate did not come down to a small value")
    return v


def run_witness(m: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                cb: Optional[CertificateBuilder] = None) -> Witness:
    """l with l+1, ..., l+m all happy.

    r is the least r >= 1 sending every y in 1..m into the cycle set; the
    cover only has to handle the images T^r(y) (plus 1).
    """
    if m < 1:
        raise ValueError("run length must be >= 1")
    _require_condition(params)
    cb = cb or CertificateBuilder(params)
    D = cycle_set(params)
    r = steps_into(range(1, m + 1), D.members, params, minimum=1)
    S = sorted({iterate(y, r, params) for y in range(1, m + 1)} | {1})
    cover = cover_witness(S, params, strategy, cb)
    shift = _emit_shift(cover.value, r, params, cb, m=m)
    sid = cb.add("run", run_claim(shift.value, m), [shift.step, cover.step])
    return Witness(shift.value, sid)


# -- certificates -----------------------------------------------------------


def certify_run(m: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY) -> WitnessCertificate:
    cb = CertificateBuilder(params)
    w = run_witness(m, params, strategy, cb)
    return cb.finish({"kind": "run", "m": m, "l": run_claim(w.value, m)["l"]})


def certify_residue(a: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                    lift: bool = False) -> WitnessCertificate:
    cb = CertificateBuilder(params)
    modulus = params.modulus if lift else params.b - 1
    if lift:
        w = lift_residue_witness(a, params, strategy, cb)
    else:
        w = residue_witness(a, params, strategy, cb)
    goal = {"kind": "residue", "a": a % modulus, "modulus": modulus,
            "n": happy_claim(w.value)["n"]}
    return cb.finish(goal)


def certify_pair(x: int, params: Params, strategy: Strategy = DEFAULT_STRATEGY) -> WitnessCertificate:
    cb = CertificateBuilder(params)
    w = pair_witness(x, params, strategy, cb)
    return cb.finish({"kind": "pair", "x": x, "l": happy_claim(w.value)["n"]})


def certify_cover(params: Params, strategy: Strategy = DEFAULT_STRATEGY,
                  members: Optional[Iterable[int]] = None) -> WitnessCertificate:
    cb = CertificateBuilder(params)
    S = sorted(set(members)) if members is not None else list(cycle_set(params).members)
    w = cover_witness(S, params, strategy, cb)
    return cb.finish({"kind": "cover", "h": happy_claim(w.value)["n"], "set": S})
