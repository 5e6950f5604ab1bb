"""Witness certificates: a list of small proof steps over symbolic numerals,
and a verifier that re-derives every step without materializing anything
large.

Each step proves one *claim*:

* ``happy(n)``            n is happy
* ``residue(n, M, a)``    n == a (mod M)
* ``shift(l, r, x, Y)``   T^r(l + y) == x + T^r(y) for every y in Y, where Y
                          is either ``range(0, m + 1)`` or an explicit list
* ``cover(h, S)``         h + y is happy for every y in S
* ``run(l, m)``           l+1, ..., l+m are all happy

Rules (the only ways a claim can be justified):

``direct``       happy(n) for a small int n listed among the leaves.
``shift-zeros``  happy(h * b^t) from happy(h): appending zeros keeps T.
``pad``          happy(pad + low) from happy(d^e * count + T(low)), where the
                 pad is ``count`` copies of digit d above ``shift`` zeros and
                 low fits below the shift (count 0 leaves just low).
``carry``        happy(l + x) where l is x* = b^s - x under k digits b-1, so
                 that l + x collapses to b^(s+k).
``congruence``   residue(n, M, a), checked by reducing the numeral.
``pad-shift``    shift(l, r, x, Y): l is a chain of r one-pads whose shifts
                 clear every level of Y, ending in the count x.
``cover-base``   cover(h, S) from one happy(h + y) premise per y.
``cover-step``   cover(l + h0, S) from shift(l, r, X, {h0 + y}) and
                 cover(X, S2) with T^r(h0 + y) in S2 for all y.
``run``          run(l, m) from shift(l, r, X, 0..m) and cover(X, S) with
                 T^r(y) in S for 1 <= y <= m.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .core import Params, is_happy, power_digit_sum
from .symbolic import (
    NotRepresentable,
    Runs,
    TowerNat,
    tn_add_disjoint,
    tn_add_full,
    tn_add_int,
    tn_canonical,
    tn_digit_count,
    tn_equal,
    tn_from_json,
    tn_from_natural,
    tn_mod,
    tn_pad_run,
    tn_power_digit_sum,
    tn_scale_small,
    tn_shift,
    tn_to_json,
    tn_cmp,
    tn_cmp_int,
)

FORMAT_VERSION = 1

IDENTITY = {
    "direct": "DirectHappiness",
    "shift-zeros": "PadIdentity",
    "pad": "PadIdentity",
    "pad-shift": "PadIdentity",
    "carry": "ScaleIdentity",
    "congruence": "CongruenceIdentity",
    "cover-base": "Composition",
    "cover-step": "Composition",
    "run": "Composition",
}


# -- claims -----------------------------------------------------------------


def _enc(t: TowerNat):
    # claims always carry the canonical form, so equal values encode equally
    if isinstance(t, Runs):
        t = tn_canonical(t, t.base)
    return tn_to_json(t)


def happy_claim(n: TowerNat) -> dict:
    return {"fact": "happy", "n": _enc(n)}


def residue_claim(n: TowerNat, modulus: int, a: int) -> dict:
    return {"fact": "residue", "n": _enc(n), "modulus": modulus, "a": a % modulus}


def shift_claim(l: TowerNat, r: int, x: TowerNat, m: Optional[int] = None,
                ys: Optional[Sequence[TowerNat]] = None) -> dict:
    claim = {"fact": "shift", "l": _enc(l), "r": r, "x": _enc(x)}
    if (m is None) == (ys is None):
        raise ValueError("give exactly one of m or ys")
    if m is not None:
        claim["range"] = m
    else:
        claim["ys"] = [_enc(y) for y in ys]
    return claim


def cover_claim(h: TowerNat, members: Sequence[int]) -> dict:
    return {"fact": "cover", "h": _enc(h), "set": sorted(set(int(y) for y in members))}


def run_claim(l: TowerNat, m: int) -> dict:
    return {"fact": "run", "l": _enc(l), "m": m}


def _key(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# -- certificate container --------------------------------------------------


@dataclass
class WitnessCertificate:
    params: Params
    goal: dict
    steps: List[dict]
    leaves: List[int]
    format_version: int = FORMAT_VERSION

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "params": self.params.to_json(),
            "goal": self.goal,
            "steps": self.steps,
            "leaves": self.leaves,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WitnessCertificate":
        for key in ("format_version", "params", "goal", "steps", "leaves"):
            if key not in obj:
                raise ValueError(f"certificate is missing {key!r}")
        return cls(
            params=Params.from_json(obj["params"]),
            goal=obj["goal"],
            steps=list(obj["steps"]),
            leaves=list(obj["leaves"]),
            format_version=obj["format_version"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "WitnessCertificate":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class CertificateBuilder:
    """Accumulates steps; proving the same claim twice reuses the first step."""

    def __init__(self, params: Params) -> None:
        self.params = params
        self.steps: List[dict] = []
        self.leaves: List[int] = []
        self._by_claim: Dict[str, int] = {}

    def add(self, rule: str, claim: dict, premises: Sequence[int] = (), **inputs) -> int:
        key = _key(claim)
        if key in self._by_claim:
            return self._by_claim[key]
        if rule not in IDENTITY:
            raise ValueError(f"unknown rule {rule!r}")
        step = {
            "id": len(self.steps),
            "rule": rule,
            "identity": IDENTITY[rule],
            "premises": list(premises),
            "claim": claim,
        }
        if inputs:
            step["inputs"] = inputs
        self.steps.append(step)
        self._by_claim[key] = step["id"]
        return step["id"]

    def claim_of(self, step_id: int) -> dict:
        return self.steps[step_id]["claim"]

    def happy_leaf(self, n: int) -> int:
        if n not in self.leaves:
            self.leaves.append(n)
        return self.add("direct", happy_claim(n))

    def finish(self, goal: dict) -> WitnessCertificate:
        return WitnessCertificate(self.params, goal, list(self.steps), sorted(self.leaves))


# -- verification -----------------------------------------------------------


@dataclass
class VerificationResult:
    ok: bool
    diagnostics: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


class _Reject(Exception):
    pass


def _tn(obj) -> TowerNat:
    try:
        return tn_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise _Reject(f"malformed numeral: {exc}") from None


def _same(x: TowerNat, y: TowerNat, b: int) -> bool:
    return tn_equal(x, y, b)


def _fits_below(y: TowerNat, s: TowerNat, b: int) -> bool:
    """y < b^s."""
    if y == 0:
        return True
    return tn_cmp(tn_digit_count(y, b), s, b) <= 0


def _one_pad_parts(t: TowerNat, b: int):
    """(s, c) when t is c ones above s zeros, else None."""
    if isinstance(t, int):
        if t < 1:
            return None
        t = tn_from_natural(t, b)
    segs = t.segments
    if len(segs) == 1 and segs[0][0] == 1:
        return 0, segs[0][1]
    if len(segs) == 2 and segs[0][0] == 0 and segs[1][0] == 1:
        return segs[0][1], segs[1][1]
    return None


def _digits_needed(m: int, b: int) -> int:
    # least s with b^s > m
    s = 0
    while b**s <= m:
        s += 1
    return s


class _Verifier:
    def __init__(self, cert: WitnessCertificate) -> None:
        self.cert = cert
        self.params = cert.params
        self.b = cert.params.b
        self.e = cert.params.e
        self.claims: Dict[int, dict] = {}
        self.diagnostics: List[str] = []

    # helpers
    def premise(self, step: dict, index: int, fact: str) -> dict:
        prem = step["premises"]
        if index >= len(prem):
            raise _Reject(f"missing premise #{index}")
        pid = prem[index]
        if pid not in self.claims:
            raise _Reject(f"premise {pid} is not an earlier verified step")
        claim = self.claims[pid]
        if claim.get("fact") != fact:
            raise _Reject(f"premise {pid} proves {claim.get('fact')!r}, expected {fact!r}")
        return claim

    def T(self, t: TowerNat) -> TowerNat:
        if t == 0:
            return 0
        return tn_power_digit_sum(t, self.params)

    def Tr(self, t: TowerNat, r: int) -> TowerNat:
        for _ in range(r):
            t = self.T(t)
        return t

    # rules
    def rule_direct(self, step, claim):
        if claim["fact"] != "happy":
            raise _Reject("direct proves only happiness")
        n = claim["n"].get("small")
        if n is None:
            raise _Reject("direct leaf must be a small integer")
        if n not in self.cert.leaves:
            raise _Reject(f"leaf {n} is not listed among the certificate leaves")
        if n < 1 or not is_happy(n, self.params):
            raise _Reject(f"leaf {n} is not happy")

    def rule_shift_zeros(self, step, claim):
        prem = self.premise(step, 0, "happy")
        t = _tn(step["inputs"]["t"])
        if not _same(tn_shift(_tn(prem["n"]), t, self.b), _tn(claim["n"]), self.b):
            raise _Reject("PadIdentity: value is not the premise followed by t zeros")

    def rule_pad(self, step, claim):
        if claim["fact"] != "happy":
            raise _Reject("pad proves only happiness")
        inp = step["inputs"]
        d = int(inp["digit"])
        s, count, low = _tn(inp["shift"]), _tn(inp["count"]), _tn(inp["low"])
        if not 1 <= d < self.b:
            raise _Reject(f"PadIdentity: pad digit {d} out of range")
        if count == 0:
            if low == 0:
                raise _Reject("PadIdentity: empty pad over nothing")
            n = low
        else:
            if not _fits_below(low, s, self.b):
                raise _Reject("PadIdentity: low part does not fit below the shift")
            n = tn_add_disjoint(tn_pad_run(d, s, count, self.b), low, shift=s, b=self.b)
        if not _same(n, _tn(claim["n"]), self.b):
            raise _Reject("PadIdentity: claimed value is not pad + low")
        target = tn_add_full(tn_scale_small(count, d**self.e), self.T(low))
        prem = self.premise(step, 0, "happy")
        if not _same(target, _tn(prem["n"]), self.b):
            raise _Reject("PadIdentity: premise is not d^e * count + T(low)")

    def rule_carry(self, step, claim):
        if claim["fact"] != "happy":
            raise _Reject("carry proves only happiness")
        inp = step["inputs"]
        x, s, k = int(inp["x"]), int(inp["s"]), _tn(inp["k"])
        l = _tn(inp["l"])
        b = self.b
        if not 1 <= x < b**s:
            raise _Reject("ScaleIdentity: need 1 <= x < b^s")
        expect = tn_add_disjoint(tn_pad_run(b - 1, s, k, b), b**s - x, shift=s, b=b)
        if not _same(expect, l, b):
            raise _Reject("ScaleIdentity: l is not x* under a run of b-1 digits")
        n = _tn(claim["n"])
        power = tn_shift(1, tn_add_int(k, s) if isinstance(k, Runs) else k + s, b)
        if not _same(n, power, b) or not _same(tn_add_int(l, x), power, b):
            raise _Reject("ScaleIdentity: l + x does not collapse to b^(s+k)")

    def rule_congruence(self, step, claim):
        if claim["fact"] != "residue":
            raise _Reject("congruence proves only residues")
        m, a = int(claim["modulus"]), int(claim["a"])
        got = tn_mod(_tn(claim["n"]), m)
        if got != a % m:
            raise _Reject(f"CongruenceIdentity: value is {got} mod {m}, not {a}")

    def rule_pad_shift(self, step, claim):
        if claim["fact"] != "shift":
            raise _Reject("pad-shift proves only shift facts")
        b = self.b
        r = int(claim["r"])
        if r < 1:
            raise _Reject("PadIdentity: need r >= 1")
        cur = _tn(claim["l"])
        if "range" in claim:
            bound = int(claim["range"])
            ys = None
        else:
            ys = [_tn(y) for y in claim["ys"]]
        for level in range(r):
            parts = _one_pad_parts(cur, b)
            if parts is None:
                raise _Reject(f"PadIdentity: level {level} is not a run of ones above zeros")
            s, c = parts
            if ys is None:
                if tn_cmp_int(s, _digits_needed(bound, b)) < 0:
                    raise _Reject(f"PadIdentity: shift at level {level} does not clear {bound}")
                bound = max(power_digit_sum(y, self.params) if y else 0 for y in range(bound + 1))
            else:
                if not all(_fits_below(y, s, b) for y in ys):
                    raise _Reject(f"PadIdentity: shift at level {level} does not clear the set")
                ys = [self.T(y) for y in ys]
            cur = c
        if not _same(cur, _tn(claim["x"]), b):
            raise _Reject("PadIdentity: innermost count differs from x")

    def rule_cover_base(self, step, claim):
        if claim["fact"] != "cover":
            raise _Reject("cover-base proves only covers")
        h = _tn(claim["h"])
        members = claim["set"]
        if len(step["premises"]) != len(members):
            raise _Reject("cover-base needs one premise per member")
        for i, y in enumerate(members):
            prem = self.premise(step, i, "happy")
            if not _same(tn_add_int(h, int(y)), _tn(prem["n"]), self.b):
                raise _Reject(f"cover-base: premise {i} is not h + {y}")

    def rule_cover_step(self, step, claim):
        if claim["fact"] != "cover":
            raise _Reject("cover-step proves only covers")
        b = self.b
        h0 = _tn(step["inputs"]["h0"])
        members = [int(y) for y in claim["set"]]
        shift = self.premise(step, 0, "shift")
        inner = self.premise(step, 1, "cover")
        if len(step["premises"]) > 2:
            pair = self.premise(step, 2, "cover")
            if not _same(_tn(pair["h"]), h0, b):
                raise _Reject("cover-step: pair premise is about another number")
        if "ys" not in shift:
            raise _Reject("cover-step needs a set-shift premise")
        ys = [_tn(y) for y in shift["ys"]]
        want = [tn_add_int(h0, y) for y in members]
        if len(ys) != len(want) or not all(any(_same(y, w, b) for y in ys) for w in want):
            raise _Reject("cover-step: shift set is not {h0 + y}")
        if not _same(_tn(shift["x"]), _tn(inner["h"]), b):
            raise _Reject("cover-step: shifted target differs from the inner cover")
        r = int(shift["r"])
        inner_set = set(inner["set"])
        for w in want:
            v = self.Tr(w, r)
            if not isinstance(v, int) or v not in inner_set:
                raise _Reject("cover-step: T^r(h0 + y) escapes the inner cover set")
        l = _tn(shift["l"])
        if not _same(tn_add_disjoint(l, h0, b=b), _tn(claim["h"]), b):
            raise _Reject("cover-step: h is not l + h0")

    def rule_run(self, step, claim):
        if claim["fact"] != "run":
            raise _Reject("run proves only runs")
        m = int(claim["m"])
        shift = self.premise(step, 0, "shift")
        cover = self.premise(step, 1, "cover")
        if shift.get("range") is None or int(shift["range"]) < m:
            raise _Reject("run: shift premise does not cover 1..m")
        if not _same(_tn(shift["l"]), _tn(claim["l"]), self.b):
            raise _Reject("run: shift premise is about another l")
        if not _same(_tn(shift["x"]), _tn(cover["h"]), self.b):
            raise _Reject("run: shifted target differs from the cover")
        r = int(shift["r"])
        members = set(cover["set"])
        for y in range(1, m + 1):
            v = self.Tr(y, r)
            if v not in members:
                raise _Reject(f"run: T^{r}({y}) = {v} is not covered")

    def run(self) -> VerificationResult:
        cert = self.cert
        if cert.format_version != FORMAT_VERSION:
            return VerificationResult(False, [f"unsupported format_version {cert.format_version!r}"])
        for leaf in cert.leaves:
            if not isinstance(leaf, int) or leaf < 1 or not is_happy(leaf, self.params):
                self.diagnostics.append(f"DirectHappiness: leaf {leaf} is not happy")
        for pos, step in enumerate(cert.steps):
            sid = step.get("id")
            rule = step.get("rule")
            try:
                if sid != pos:
                    raise _Reject(f"step ids must be sequential, got {sid}")
                handler = getattr(self, "rule_" + str(rule).replace("-", "_"), None)
                if handler is None:
                    raise _Reject(f"unknown rule {rule!r}")
                if step.get("identity") != IDENTITY[rule]:
                    raise _Reject("identity tag does not match the rule")
                handler(step, step["claim"])
            except _Reject as exc:
                self.diagnostics.append(f"step {sid} ({rule}): {exc}")
                continue
            except (KeyError, TypeError) as exc:
                self.diagnostics.append(f"step {sid} ({rule}): malformed step ({exc!r})")
                continue
            except (ValueError, NotRepresentable) as exc:
                self.diagnostics.append(f"step {sid} ({rule}): {exc}")
                continue
            self.claims[sid] = step["claim"]
        self.check_goal()
        return VerificationResult(not self.diagnostics, self.diagnostics)

    def proven(self, claim: dict) -> bool:
        key = _key(claim)
        return any(_key(c) == key for c in self.claims.values())

    def check_goal(self) -> None:
        goal = self.cert.goal
        kind = goal.get("kind")
        try:
            if kind == "run":
                needed = [run_claim(_tn(goal["l"]), int(goal["m"]))]
            elif kind == "residue":
                n = _tn(goal["n"])
                needed = [happy_claim(n), residue_claim(n, int(goal["modulus"]), int(goal["a"]))]
            elif kind == "pair":
                needed = [cover_claim(_tn(goal["l"]), [0, int(goal["x"])])]
            elif kind == "cover":
                needed = [cover_claim(_tn(goal["h"]), goal["set"])]
            else:
                raise _Reject(f"unknown goal kind {kind!r}")
        except (_Reject, KeyError, TypeError, ValueError) as exc:
            self.diagnostics.append(f"goal: {exc}")
            return
        for claim in needed:
            if not self.proven(claim):
                self.diagnostics.append(f"goal: no verified step proves {claim['fact']}")


def verify_certificate(cert: WitnessCertificate, params: Optional[Params] = None) -> VerificationResult:
    """Check every step and the goal; never raises on bad input."""
    if params is not None and cert.params != params:
        return VerificationResult(False, [f"certificate is for {cert.params}, not {params}"])
    return _Verifier(cert).run()
