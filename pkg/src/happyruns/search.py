"""Exhaustive scans over [1, bound]: consecutive happy runs, happy numbers in
a residue class, and numbers h with h + x happy for every x in a set.

Happiness of n is read from a table indexed by T(n), and T itself is
evaluated a block at a time using T(q*P + r) = T(q) + T(r) for P = b^d.
The range is cut into fixed chunks; each chunk is reduced to a small
fragment (leading and trailing happy stretches plus interior hits) and the
fragments are stitched strictly in chunk order, so the outcome never depends
on how many workers ran or how big the chunks were.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Params, contraction_bound, get_cache, is_happy, t_array, t_bound

FORMAT_VERSION = 1
BLOCK_DIGITS = 4
DEFAULT_CHUNK = 1 << 22
# Largest low block we are willing to tabulate.
MAX_BLOCK = 1 << 20


def default_workers() -> int:
    env = os.environ.get("HAPPY_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"HAPPY_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError("HAPPY_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


# -- scan modes -------------------------------------------------------------


@dataclass(frozen=True)
class RunMode:
    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("run length must be >= 1")

    def to_json(self) -> dict:
        return {"kind": "run", "m": self.m}


@dataclass(frozen=True)
class ResidueMode:
    a: int
    modulus: int

    def __post_init__(self) -> None:
        if self.modulus < 1 or not 0 <= self.a < self.modulus:
            raise ValueError(f"need 0 <= a < modulus, got a={self.a}, modulus={self.modulus}")

    def to_json(self) -> dict:
        return {"kind": "residue", "a": self.a, "modulus": self.modulus}


@dataclass(frozen=True)
class CoverMode:
    """h qualifies when h + x is happy for every x in ``members``."""

    members: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.members or min(self.members) < 0:
            raise ValueError("cover members must be a non-empty set of naturals")
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    def to_json(self) -> dict:
        return {"kind": "cover", "members": list(self.members)}


ScanMode = Union[RunMode, ResidueMode, CoverMode]


def mode_from_json(obj: dict) -> ScanMode:
    kind = obj.get("kind")
    if kind == "run":
        return RunMode(int(obj["m"]))
    if kind == "residue":
        return ResidueMode(int(obj["a"]), int(obj["modulus"]))
    if kind == "cover":
        return CoverMode(tuple(int(x) for x in obj["members"]))
    raise ValueError(f"unknown scan mode {kind!r}")


# -- records and checkpoints ------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    start: int
    length: int

    def to_json(self, params: Optional[Params] = None) -> dict:
        out = {"start": self.start, "length": self.length}
        if params is not None:
            out["params"] = params.to_json()
        return out


@dataclass
class ScanCheckpoint:
    """Resumable scan state.

    ``scan_mode`` carries the mode plus the scan window (``bound``) and
    whether the scan stops at the first hit, so a checkpoint alone is enough
    to resume.  ``found`` holds run records (as dicts) or plain hits.
    """

    params: Params
    scan_mode: dict
    next_n: int = 1
    open_run_start: Optional[int] = None
    open_run_len: int = 0
    found: list = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    @property
    def mode(self) -> ScanMode:
        return mode_from_json(self.scan_mode)

    @property
    def bound(self) -> int:
        return int(self.scan_mode["bound"])

    @property
    def first_only(self) -> bool:
        return bool(self.scan_mode.get("first_only", False))

    @property
    def done(self) -> bool:
        return self.next_n > self.bound or (self.first_only and bool(self.found))

    def check(self) -> None:
        if self.open_run_start is not None:
            if self.open_run_start + self.open_run_len != self.next_n:
                raise ValueError("checkpoint open run does not end at next_n")
        elif self.open_run_len:
            raise ValueError("checkpoint has a run length but no run start")

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "params": self.params.to_json(),
            "scan_mode": dict(self.scan_mode),
            "next_n": self.next_n,
            "open_run_start": self.open_run_start,
            "open_run_len": self.open_run_len,
            "found": list(self.found),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScanCheckpoint":
        version = obj.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format_version {version!r}")
        cp = cls(
            params=Params.from_json(obj["params"]),
            scan_mode=dict(obj["scan_mode"]),
            next_n=int(obj["next_n"]),
            open_run_start=obj["open_run_start"],
            open_run_len=int(obj["open_run_len"]),
            found=list(obj["found"]),
            format_version=version,
        )
        mode_from_json(cp.scan_mode)
        cp.check()
        return cp

    def save(self, path: str) -> None:
        write_json_atomic(path, self.to_json())

    @classmethod
    def load(cls, path: str) -> "ScanCheckpoint":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def write_json_atomic(path: str, obj) -> None:
    """Write JSON to a temp file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True)
            fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_records_jsonl(records: Iterable[RunRecord], params: Params, fh) -> None:
    for rec in records:
        fh.write(json.dumps(rec.to_json(params)) + "\n")


# -- the chunk kernel -------------------------------------------------------


@dataclass(frozen=True)
class ScanTables:
    """Read-only data every chunk needs: T on the low block and a happiness
    table indexed by T-values."""

    params: Params
    block: int
    low: np.ndarray
    happy: np.ndarray

    @classmethod
    def build(cls, params: Params, top: int) -> "ScanTables":
        b = params.b
        block = b
        while block * b <= MAX_BLOCK and block < b**BLOCK_DIGITS:
            block *= b
        low = t_array(np.arange(block, dtype=np.int64), params)
        cap = max(contraction_bound(params), t_bound(max(top, 1), params) + 1)
        happy = get_cache(params, cap).table
        return cls(params, block, low, happy)


def happy_bitmap(tables: ScanTables, lo: int, hi: int) -> np.ndarray:
    """Boolean array h with h[i] true iff lo + i is happy (0 counts as unhappy)."""
    if hi <= lo:
        return np.zeros(0, dtype=bool)
    P = tables.block
    q0, q1 = lo // P, (hi - 1) // P
    q = np.arange(q0, q1 + 1, dtype=np.int64)
    high = t_array(q, tables.params)
    tt = (high[:, None] + tables.low[None, :]).ravel()
    off = lo - q0 * P
    return tables.happy[tt[off:off + (hi - lo)]]


@dataclass(frozen=True)
class Fragment:
    lo: int
    hi: int
    all_happy: bool
    prefix: int
    suffix: int
    # interior runs (run mode) or qualifying values (other modes)
    hits: Tuple = ()


def _run_fragment(hp: np.ndarray, lo: int, m: int, first_only: bool) -> Fragment:
    hi = lo + len(hp)
    bad = np.flatnonzero(~hp)
    if len(bad) == 0:
        return Fragment(lo, hi, True, len(hp), len(hp))
    prefix = int(bad[0])
    suffix = len(hp) - 1 - int(bad[-1])
    gaps = np.diff(bad) - 1
    long_ = np.flatnonzero(gaps >= m)
    if first_only:
        long_ = long_[:1]
    hits = tuple((lo + int(bad[k]) + 1, int(gaps[k])) for k in long_)
    return Fragment(lo, hi, False, prefix, suffix, hits)


def scan_chunk(tables: ScanTables, mode: ScanMode, lo: int, hi: int, first_only: bool) -> Fragment:
    """Reduce [lo, hi) to a fragment.  ``lo`` is at least 1."""
    if isinstance(mode, RunMode):
        return _run_fragment(happy_bitmap(tables, lo, hi), lo, mode.m, first_only)
    if isinstance(mode, ResidueMode):
        hp = happy_bitmap(tables, lo, hi)
        start = (mode.a - lo) % mode.modulus
        idx = np.flatnonzero(hp[start::mode.modulus]) * mode.modulus + start
    else:
        top = mode.members[-1]
        hp = happy_bitmap(tables, lo, hi + top)
        ok = np.ones(hi - lo, dtype=bool)
        for x in mode.members:
            ok &= hp[x:x + hi - lo]
        idx = np.flatnonzero(ok)
    if first_only:
        idx = idx[:1]
    return Fragment(lo, hi, False, 0, 0, tuple(lo + int(i) for i in idx))


_WORKER_TABLES: Optional[ScanTables] = None


def _init_worker(tables: ScanTables) -> None:
    global _WORKER_TABLES
    _WORKER_TABLES = tables


def _worker_chunk(args) -> Fragment:
    mode, lo, hi, first_only = args
    return scan_chunk(_WORKER_TABLES, mode, lo, hi, first_only)


# -- merge ------------------------------------------------------------------


def _merge(cp: ScanCheckpoint, frag: Fragment, mode: ScanMode) -> None:
    """Fold one fragment (the next chunk in order) into the checkpoint."""
    if frag.lo != cp.next_n:
        raise RuntimeError(f"fragment starts at {frag.lo}, expected {cp.next_n}")
    first_only = cp.first_only
    if not isinstance(mode, RunMode):
        for h in frag.hits:
            if first_only and cp.found:
                break
            cp.found.append(h)
        cp.next_n = frag.hi
        return
    m = mode.m
    start = cp.open_run_start
    length = cp.open_run_len
    if frag.all_happy:
        if start is None:
            start = frag.lo
        length += frag.hi - frag.lo
        if first_only and length >= m:
            cp.found.append(RunRecord(start, length).to_json())
    else:
        run_len = length + frag.prefix
        run_start = start if start is not None else frag.lo
        if run_len >= m:
            cp.found.append(RunRecord(run_start, run_len).to_json())
        for s, n in frag.hits:
            if first_only and cp.found:
                break
            cp.found.append(RunRecord(s, n).to_json())
        length = frag.suffix
        start = frag.hi - frag.suffix if frag.suffix else None
    cp.next_n = frag.hi
    cp.open_run_start, cp.open_run_len = start, length
    if first_only and cp.found:
        del cp.found[1:]


def _close(cp: ScanCheckpoint, mode: ScanMode) -> None:
    # a run still open at the end of the window is complete within it
    if isinstance(mode, RunMode) and cp.open_run_start is not None:
        if cp.open_run_len >= mode.m and not (cp.first_only and cp.found):
            cp.found.append(RunRecord(cp.open_run_start, cp.open_run_len).to_json())


# -- driver -----------------------------------------------------------------


def new_checkpoint(params: Params, mode: ScanMode, bound: int, first_only: bool) -> ScanCheckpoint:
    if bound < 1:
        raise ValueError("bound must be >= 1")
    scan = dict(mode.to_json(), bound=int(bound), first_only=bool(first_only))
    return ScanCheckpoint(params, scan)


def parallel_scan(
    params: Params,
    mode: ScanMode,
    bound: int,
    chunk_size: int = DEFAULT_CHUNK,
    worker_count: int = 1,
    *,
    first_only: bool = False,
    resume: Optional[ScanCheckpoint] = None,
    checkpoint_path: Optional[str] = None,
    every: Optional[int] = None,
    stop_at: Optional[int] = None,
) -> ScanCheckpoint:
    """Scan [1, bound] and return the final checkpoint.

    With ``first_only`` the scan stops at the least hit.  ``stop_at``
    interrupts the scan once ``next_n`` reaches it (the returned checkpoint
    can be resumed).  ``every`` sets how many values pass between checkpoint
    writes when ``checkpoint_path`` is given.
    """
    if isinstance(mode, RunMode) and chunk_size < mode.m:
        raise ValueError("chunk_size must be >= the run length")
    if chunk_size < 1 or worker_count < 1:
        raise ValueError("chunk_size and worker_count must be >= 1")
    if resume is not None:
        cp = ScanCheckpoint.from_json(resume.to_json())
        if cp.params != params or cp.mode != mode or cp.bound != bound or cp.first_only != first_only:
            raise ValueError("checkpoint does not match the requested scan")
    else:
        cp = new_checkpoint(params, mode, bound, first_only)
    end = bound + 1
    if stop_at is not None:
        end = min(end, max(stop_at, cp.next_n))
    top = bound + (mode.members[-1] if isinstance(mode, CoverMode) else 0)
    tables = ScanTables.build(params, top)
    last_saved = cp.next_n

    def chunks():
        lo = cp.next_n
        while lo < end:
            hi = min(lo + chunk_size, end)
            yield lo, hi
            lo = hi

    def after_merge():
        nonlocal last_saved
        if checkpoint_path and every and cp.next_n - last_saved >= every:
            cp.save(checkpoint_path)
            last_saved = cp.next_n

    if worker_count == 1:
        for lo, hi in chunks():
            _merge(cp, scan_chunk(tables, mode, lo, hi, first_only), mode)
            after_merge()
            if cp.done:
                break
    else:
        with ProcessPoolExecutor(worker_count, initializer=_init_worker, initargs=(tables,)) as pool:
            pending = chunks()
            wave = worker_count * 2
            while not cp.done:
                batch = [(mode, lo, hi, first_only) for lo, hi in _take(pending, wave)]
                if not batch:
                    break
                for frag in pool.map(_worker_chunk, batch):
                    _merge(cp, frag, mode)
                    after_merge()
                    if cp.done:
                        break
    if cp.next_n > bound:
        _close(cp, mode)
    if checkpoint_path:
        cp.save(checkpoint_path)
    return cp


def _take(it, n):
    out = []
    for item in it:
        out.append(item)
        if len(out) == n:
            break
    return out


def scan_records(cp: ScanCheckpoint) -> List[RunRecord]:
    return [RunRecord(int(r["start"]), int(r["length"])) for r in cp.found]


def _extend_run(params: Params, start: int, length: int, bound: int) -> int:
    n = start + length
    while n <= bound and is_happy(n, params):
        n += 1
    return n - start


def find_least_run(
    params: Params,
    m: int,
    bound: int,
    resume: Optional[ScanCheckpoint] = None,
    **kw,
) -> Tuple[Optional[RunRecord], ScanCheckpoint]:
    """Least start s with s, ..., s+m-1 all happy and s+m-1 <= bound.

    The reported length is the run through s, extended while it stays
    inside [1, bound] (some parameters make every number happy).
    """
    cp = parallel_scan(params, RunMode(m), bound, first_only=True, resume=resume, **kw)
    if not cp.found:
        return None, cp
    rec = scan_records(cp)[0]
    return RunRecord(rec.start, _extend_run(params, rec.start, rec.length, bound)), cp


def find_happy_in_residue(a: int, modulus: int, params: Params, bound: int, **kw) -> Optional[int]:
    """Least happy h <= bound with h == a (mod modulus)."""
    cp = parallel_scan(params, ResidueMode(a % modulus if modulus else a, modulus), bound,
                       first_only=True, **kw)
    return cp.found[0] if cp.found else None


def find_cover_h(params: Params, members: Sequence[int], bound: int, **kw) -> Optional[int]:
    """Least h <= bound with h + x happy for every x in ``members``."""
    cp = parallel_scan(params, CoverMode(tuple(members)), bound, first_only=True, **kw)
    return cp.found[0] if cp.found else None


def find_pair_h(params: Params, x: int, bound: int, **kw) -> Optional[int]:
    """Least h <= bound with both h and h + x happy."""
    return find_cover_h(params, (0, x), bound, **kw)
