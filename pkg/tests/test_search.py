from __future__ import annotations

import json
import os
import random

import numpy as np
import pytest

import oracles
from happyruns.core import Params, cycle_set, digits_of, is_happy, power_digit_sum
from happyruns.search import (
    CoverMode,
    FORMAT_VERSION,
    ResidueMode,
    RunMode,
    RunRecord,
    ScanCheckpoint,
    ScanTables,
    default_workers,
    find_cover_h,
    find_happy_in_residue,
    find_least_run,
    find_pair_h,
    happy_bitmap,
    mode_from_json,
    parallel_scan,
    scan_records,
    write_json_atomic,
    write_records_jsonl,
)

SCAN_GRID = [Params(2, 10), Params(3, 10), Params(2, 4), Params(2, 3), Params(1, 10), Params(2, 16), Params(3, 7)]


# -- the block decomposition ------------------------------------------------


@pytest.mark.parametrize("p", [Params(2, 10), Params(3, 14), Params(5, 2), Params(2, 16)])
def test_block_decomposition_matches_digit_loop(p):
    rng = np.random.default_rng(1)
    tables = ScanTables.build(p, 10**12)
    P = tables.block
    ns = rng.integers(1, 10**12, size=10**5)
    from happyruns.core import t_array

    got = t_array(ns // P, p) + tables.low[ns % P]
    for n, t in zip(ns[:2000], got[:2000]):
        assert t == sum(d**p.e for d in digits_of(int(n), p.b))
    assert np.array_equal(got, t_array(ns, p))


@pytest.mark.parametrize("p", SCAN_GRID)
def test_happy_bitmap_matches_naive_mask(p):
    tables = ScanTables.build(p, 10**5)
    want = oracles.happy_mask(p.e, p.b, 10**5)
    assert np.array_equal(happy_bitmap(tables, 1, 10**5 + 1), want[1:])
    assert np.array_equal(happy_bitmap(tables, 777, 12345), want[777:12345])
    assert len(happy_bitmap(tables, 5, 5)) == 0


# -- least runs ---------------------------------------------------------------


def test_least_run_examples():
    rec, cp = find_least_run(Params(2, 10), 5, 10**5)
    assert rec == RunRecord(44488, 5)
    assert cp.found and cp.first_only
    rec, _ = find_least_run(Params(2, 10), 5, 10**5, chunk_size=10**3, worker_count=4)
    assert rec.start == 44488


def test_least_run_respects_the_bound():
    assert find_least_run(Params(2, 10), 5, 44492)[0].start == 44488
    assert find_least_run(Params(2, 10), 5, 44491)[0] is None


def test_least_run_reports_the_maximal_length():
    p = Params(2, 10)
    rec, _ = find_least_run(p, 1, 100)
    assert rec.start == 1 and rec.length == 1
    rec, _ = find_least_run(p, 2, 100)
    assert rec == RunRecord(31, 2)
    rec, _ = find_least_run(p, 3, 10**4, chunk_size=3)
    assert all(is_happy(n, p) for n in range(rec.start, rec.start + rec.length))
    assert not is_happy(rec.start - 1, p) and not is_happy(rec.start + rec.length, p)


@pytest.mark.parametrize("p", SCAN_GRID)
@pytest.mark.parametrize("m", range(1, 7))
def test_least_run_agrees_with_naive_loop(p, m):
    bound = 10**5
    rec, _ = find_least_run(p, m, bound, chunk_size=9973)
    want = oracles.least_run(p.e, p.b, m, bound)
    assert (rec.start if rec else None) == want
    if rec:
        assert all(oracles.happy_cached(n, p.e, p.b) for n in range(rec.start, rec.start + rec.length))
        end = rec.start + rec.length
        assert end > bound or not oracles.happy_cached(end, p.e, p.b)


@pytest.mark.parametrize("p", [Params(2, 10), Params(2, 3), Params(1, 10)])
@pytest.mark.parametrize("m", [1, 2, 4])
def test_all_runs_agree_with_naive_loop(p, m):
    bound = 3 * 10**4
    cp = parallel_scan(p, RunMode(m), bound, chunk_size=1013)
    got = [(r.start, r.length) for r in scan_records(cp)]
    assert got == oracles.all_runs(p.e, p.b, m, bound)


def test_runs_spanning_whole_chunks_are_stitched():
    # chunks down to a single value force every run through the stitching path
    p = Params(2, 10)
    want = oracles.all_runs(2, 10, 1, 5000)
    for chunk in (1, 2, 3, 5, 64):
        cp = parallel_scan(p, RunMode(1), 5000, chunk_size=chunk)
        assert [(r.start, r.length) for r in scan_records(cp)] == want


def test_run_length_is_capped_at_the_bound_when_everything_is_happy():
    p = Params(2, 4)
    assert cycle_set(p).members == (1,)
    rec, _ = find_least_run(p, 3, 500)
    assert rec == RunRecord(1, 500)


def test_rejects_chunks_shorter_than_the_run():
    with pytest.raises(ValueError):
        parallel_scan(Params(2, 10), RunMode(5), 100, chunk_size=4)


# -- residues and covers -------------------------------------------------------


def test_residue_examples():
    p = Params(2, 10)
    assert find_happy_in_residue(7, 9, p, 10**3) == 7
    assert find_happy_in_residue(1, 9, p, 10**3) == 1
    assert find_happy_in_residue(0, 3, Params(3, 10), 10**5) is None
    assert [find_happy_in_residue(a, 9, p, 10**4) for a in range(9)] == [1125, 1, 236, 129, 13, 23, 888, 7, 44]
    assert find_happy_in_residue(36, 81, p, 10**4) == 1251


@pytest.mark.parametrize("p,M", [(Params(2, 10), 81), (Params(2, 16), 15), (Params(3, 14), 169), (Params(2, 3), 4)])
def test_residue_agrees_with_naive_loop(p, M):
    mask = oracles.happy_mask(p.e, p.b, 5 * 10**4)
    for a in range(0, M, max(1, M // 20)):
        hits = [n for n in range(a or M, 5 * 10**4 + 1, M) if mask[n]]
        assert find_happy_in_residue(a, M, p, 5 * 10**4, chunk_size=4099) == (hits[0] if hits else None)


def test_cover_examples():
    assert find_cover_h(Params(2, 2), cycle_set(Params(2, 2)).members, 100) == 1
    D16 = cycle_set(Params(2, 16)).members
    assert D16 == (1, 13, 50, 85, 146, 169, 181)
    assert find_cover_h(Params(2, 16), D16, 10**5) == 51143
    assert find_pair_h(Params(2, 10), 4, 10**3) == 19


def test_no_cover_for_base_ten_below_ten_million():
    p = Params(2, 10)
    D = cycle_set(p).members
    assert find_cover_h(p, D, 10**7) is None
    mask = oracles.happy_mask(2, 10, 10**7 + max(D))
    ok = np.ones(10**7, dtype=bool)
    for x in D:
        ok &= mask[1 + x:1 + x + 10**7]
    assert not ok.any()


def test_cover_agrees_with_naive_loop():
    p = Params(2, 16)
    D = cycle_set(p).members
    mask = oracles.happy_mask(2, 16, 60000)
    want = next(h for h in range(1, 59000) if all(mask[h + x] for x in D))
    assert want == 51143
    cp = parallel_scan(p, CoverMode(D), 58000, chunk_size=5000)
    assert cp.found == [h for h in range(1, 58001) if all(mask[h + x] for x in D)]


# -- determinism and checkpoints ---------------------------------------------


@pytest.mark.parametrize("mode", [RunMode(3), ResidueMode(4, 9), CoverMode((0, 4))])
def test_scans_identical_across_workers_and_chunks(mode):
    p = Params(2, 10)
    bound = 2 * 10**5
    ref = parallel_scan(p, mode, bound, chunk_size=10**4).to_json()
    for workers in (1, 2):
        for chunk in (10**3, 7 * 10**3):
            got = parallel_scan(p, mode, bound, chunk_size=chunk, worker_count=workers).to_json()
            assert got == ref


@pytest.mark.parametrize("stop", [1, 2, 999, 44490, 123457])
def test_interrupt_and_resume_is_identical(stop, tmp_path):
    p = Params(2, 10)
    bound = 2 * 10**5
    ref = parallel_scan(p, RunMode(2), bound, chunk_size=5000)
    path = str(tmp_path / "cp.json")
    part = parallel_scan(p, RunMode(2), bound, chunk_size=5000, checkpoint_path=path, stop_at=stop)
    assert not part.done or stop > bound
    loaded = ScanCheckpoint.load(path)
    assert loaded.to_json() == part.to_json()
    done = parallel_scan(p, RunMode(2), bound, chunk_size=777, resume=loaded)
    assert done.to_json() == ref.to_json()


def test_least_run_resume_matches(tmp_path):
    p = Params(2, 16)
    part = parallel_scan(p, RunMode(4), 10**6, first_only=True, stop_at=3000, chunk_size=1000)
    rec, cp = find_least_run(p, 4, 10**6, resume=part, chunk_size=1000)
    ref, refcp = find_least_run(p, 4, 10**6)
    assert rec == ref and cp.found == refcp.found


def test_periodic_checkpoint_writes(tmp_path):
    path = tmp_path / "cp.json"
    parallel_scan(Params(2, 10), RunMode(3), 50000, chunk_size=1000, checkpoint_path=str(path), every=5000)
    obj = json.loads(path.read_text())
    assert obj["format_version"] == FORMAT_VERSION
    assert obj["next_n"] == 50001
    assert set(obj) == {"format_version", "params", "scan_mode", "next_n", "open_run_start", "open_run_len", "found"}
    assert [p.name for p in tmp_path.iterdir()] == ["cp.json"]


def test_resume_rejects_mismatched_scan():
    part = parallel_scan(Params(2, 10), RunMode(2), 1000, stop_at=100)
    with pytest.raises(ValueError):
        parallel_scan(Params(2, 10), RunMode(3), 1000, resume=part)
    with pytest.raises(ValueError):
        parallel_scan(Params(2, 10), RunMode(2), 2000, resume=part)


def test_checkpoint_validation():
    cp = parallel_scan(Params(2, 10), RunMode(2), 1000, stop_at=32)
    obj = cp.to_json()
    assert ScanCheckpoint.from_json(obj).to_json() == obj
    with pytest.raises(ValueError):
        ScanCheckpoint.from_json(dict(obj, format_version=99))
    with pytest.raises(ValueError):
        ScanCheckpoint.from_json(dict(obj, open_run_start=5, open_run_len=3))
    with pytest.raises(ValueError):
        mode_from_json({"kind": "bogus"})


def test_open_run_invariant_holds_at_every_stop():
    p = Params(2, 10)
    for stop in range(2, 400, 7):
        cp = parallel_scan(p, RunMode(2), 1000, chunk_size=3, stop_at=stop)
        cp.check()
        if cp.open_run_start is not None:
            assert all(is_happy(n, p) for n in range(cp.open_run_start, cp.next_n))
            assert cp.open_run_start == 1 or not is_happy(cp.open_run_start - 1, p)


def test_atomic_write_replaces_whole_file(tmp_path):
    path = tmp_path / "out.json"
    path.write_text("old contents that are longer than the new ones")
    write_json_atomic(str(path), {"a": 1})
    assert json.loads(path.read_text()) == {"a": 1}
    assert len(list(tmp_path.iterdir())) == 1


def test_records_jsonl_schema(tmp_path):
    path = tmp_path / "r.jsonl"
    with open(path, "w") as fh:
        write_records_jsonl([RunRecord(44488, 5)], Params(2, 10), fh)
    line, = path.read_text().splitlines()
    assert json.loads(line) == {"start": 44488, "length": 5, "params": {"e": 2, "b": 10}}


def test_worker_override(monkeypatch):
    monkeypatch.setenv("HAPPY_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("HAPPY_THREADS", "zero")
    with pytest.raises(ValueError):
        default_workers()
    monkeypatch.delenv("HAPPY_THREADS")
    assert default_workers() >= 1


def test_modes_validate():
    with pytest.raises(ValueError):
        RunMode(0)
    with pytest.raises(ValueError):
        ResidueMode(9, 9)
    with pytest.raises(ValueError):
        CoverMode(())
    assert CoverMode((4, 0, 4)).members == (0, 4)
