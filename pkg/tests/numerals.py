"""Random canonical tower numerals with known materialized values."""

from __future__ import annotations

import random

from happyruns.symbolic import Runs, tn_canonical, tn_value

CAP = 10**4


def random_numeral(rng: random.Random, b: int, level: int, budget: int):
    """A random canonical numeral with at most ``budget`` digits."""
    segs = []
    prev = None
    for i in range(rng.randint(1, 4)):
        d = rng.randrange(b)
        if d == prev:
            d = (d + 1) % b
        if level and rng.random() < 0.5:
            c = random_numeral(rng, b, level - 1, max(2, budget // 8).bit_length())
            c = c if tn_value(c, 40) and tn_value(c, 40) <= budget // 4 else rng.randint(1, 9)
        else:
            c = rng.randint(1, max(1, budget // 4))
        segs.append((d, c))
        prev = d
    if segs[-1][0] == 0:
        segs.append((rng.randrange(1, b) if segs[-1][0] != 1 else 1, 1))
        if segs[-1][0] == segs[-2][0]:
            segs[-1] = (segs[-1][0] % (b - 1) + 1, 1)
    out = Runs(b, tuple(segs))
    return tn_canonical(out, b)


def numerals(seed_count: int, budget: int = CAP, bases=(2, 3, 7, 10, 16)):
    rng = random.Random(seed_count)
    out = []
    while len(out) < seed_count:
        b = rng.choice(bases)
        t = random_numeral(rng, b, 2, budget)
        v = tn_value(t, budget)
        if v:
            out.append((t, v, b))
    return out
