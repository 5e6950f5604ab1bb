"""Command-line interface.

Exit codes: 0 success (found / valid / condition holds), 1 not found or
invalid certificate, 2 bad parameters or failing condition, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import List, Optional, Sequence

from .certificate import WitnessCertificate, verify_certificate
from .constructor import (
    ConditionFailure,
    Strategy,
    certify_cover,
    certify_residue,
    certify_run,
)
from .core import (
    MAX_TABLE,
    Params,
    condition_holds,
    contraction_bound,
    cycle_set,
    is_happy,
    trajectory,
)
from .search import (
    RunMode,
    ScanCheckpoint,
    default_workers,
    find_cover_h,
    find_happy_in_residue,
    find_least_run,
    parallel_scan,
    scan_records,
    DEFAULT_CHUNK,
)
from .symbolic import DEFAULT_DEPTH_LIMIT, DepthLimitExceeded, NotRepresentable, depth_limit, tn_from_json, tn_repr

EXIT_OK, EXIT_NOT_FOUND, EXIT_BAD_PARAMS, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        v = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _natural(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="happyruns",
        description="Happy numbers for the digit power-sum map T_{e,b}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, params_required: bool = True) -> None:
        p.add_argument("--e", type=int, required=params_required, help="exponent (>= 1)")
        p.add_argument("--b", type=int, required=params_required, help="base (>= 2)")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--depth-limit", type=_positive, default=DEFAULT_DEPTH_LIMIT,
                       help="largest tower nesting symbolic arithmetic will accept")

    def witness_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max", type=_positive, default=10**7, help="search bound")
        p.add_argument("--construct-only", action="store_true",
                       help="skip searches and always build witnesses")
        p.add_argument("--workers", type=_positive, default=None)

    p = sub.add_parser("check-condition", help="does (e, b) allow consecutive happy numbers?")
    common(p)

    p = sub.add_parser("classify", help="happy or not, with the trajectory")
    p.add_argument("n", type=_positive)
    common(p)

    p = sub.add_parser("cycle-set", help="the cycle set and contraction bound")
    common(p)

    p = sub.add_parser("find-runs", help="least run of consecutive happy numbers")
    common(p)
    p.add_argument("--len", dest="length", type=_positive, required=True)
    p.add_argument("--max", type=_positive, default=10**7)
    p.add_argument("--all", action="store_true", help="list every maximal run of at least --len")
    p.add_argument("--resume", metavar="PATH")
    p.add_argument("--checkpoint", metavar="PATH")
    p.add_argument("--every", type=_positive, default=10**6)
    p.add_argument("--workers", type=_positive, default=None)
    p.add_argument("--chunk-size", type=_positive, default=DEFAULT_CHUNK)

    p = sub.add_parser("residue-witness", help="smallest happy number in a residue class")
    common(p)
    p.add_argument("--a", type=_natural, required=True)
    p.add_argument("--lift", action="store_true", help="work mod (b-1)^e instead of b-1")
    p.add_argument("--certify", metavar="PATH", help="write a certificate for the witness")
    witness_flags(p)

    p = sub.add_parser("cover", help="h with h + x happy for every x in the cycle set")
    common(p)
    p.add_argument("--certify", metavar="PATH")
    witness_flags(p)

    p = sub.add_parser("certify-run", help="certificate for a run of length --len")
    common(p)
    p.add_argument("--len", dest="length", type=_positive, required=True)
    p.add_argument("--out", metavar="PATH", required=True)
    witness_flags(p)

    p = sub.add_parser("verify", help="check a certificate file")
    p.add_argument("path")
    common(p, params_required=False)
    return parser


# -- output -----------------------------------------------------------------


def _emit(args, obj: dict, text: str, rows: Optional[List[Sequence]] = None,
          header: Optional[Sequence[str]] = None) -> None:
    if args.format == "json":
        print(json.dumps(obj, sort_keys=True))
    elif args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in rows if rows is not None else [[obj[k] for k in header]]:
            w.writerow(row)
    else:
        print(text)


def _params(args) -> Params:
    try:
        return Params(args.e, args.b)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _strategy(args) -> Strategy:
    return Strategy(construct_only=args.construct_only, search_bound=args.max)


def _show(t) -> str:
    return str(t) if isinstance(t, int) else tn_repr(t)


# -- commands ---------------------------------------------------------------


def cmd_check_condition(args) -> int:
    params = _params(args)
    cond = condition_holds(params)
    obj = {"params": params.to_json(), "holds": cond.holds, "prime": cond.prime}
    text = "holds" if cond.holds else f"fails: p={cond.prime}"
    _emit(args, obj, text, header=("holds", "prime"), rows=[[cond.holds, cond.prime or ""]])
    return EXIT_OK if cond.holds else EXIT_BAD_PARAMS


def cmd_classify(args) -> int:
    params = _params(args)
    tr = trajectory(args.n, params)
    happy = is_happy(args.n, params)
    obj = {"n": args.n, "params": params.to_json(), "happy": happy, "trajectory": tr.to_json()}
    path = " -> ".join(str(v) for v in [args.n] + tr.steps)
    text = f"{args.n} is {'happy' if happy else 'unhappy'}\n{path}"
    if not happy:
        text += f"\nenters cycle at {tr.cycle_entry}"
    _emit(args, obj, text, header=("n", "happy", "steps", "terminal"),
          rows=[[args.n, happy, " ".join(map(str, tr.steps)), tr.terminal]])
    return EXIT_OK


def cmd_cycle_set(args) -> int:
    params = _params(args)
    if contraction_bound(params) > MAX_TABLE:
        raise UsageError("contraction bound too large to tabulate for these parameters")
    cs = cycle_set(params)
    text = f"members: {' '.join(map(str, cs.members))}\ncontraction bound: {cs.contraction_bound}"
    _emit(args, cs.to_json(), text, header=("member",), rows=[[m] for m in cs.members])
    return EXIT_OK


def cmd_find_runs(args) -> int:
    params = _params(args)
    workers = args.workers or default_workers()
    resume = ScanCheckpoint.load(args.resume) if args.resume else None
    if args.chunk_size < args.length:
        raise UsageError("--chunk-size must be at least --len")
    kw = dict(chunk_size=args.chunk_size, worker_count=workers,
              checkpoint_path=args.checkpoint, every=args.every)
    if args.all:
        cp = parallel_scan(params, RunMode(args.length), args.max, resume=resume, **kw)
        records = scan_records(cp)
    else:
        rec, cp = find_least_run(params, args.length, args.max, resume=resume, **kw)
        records = [rec] if rec else []
    if args.format == "json":
        for r in records:
            print(json.dumps(r.to_json(params)))
    elif args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("start", "length", "e", "b"))
        for r in records:
            w.writerow((r.start, r.length, params.e, params.b))
    else:
        for r in records:
            print(f"start {r.start} length {r.length}")
    if not records:
        if args.format == "text":
            print(f"none below bound {args.max}")
        return EXIT_NOT_FOUND
    return EXIT_OK


def cmd_residue_witness(args) -> int:
    params = _params(args)
    modulus = params.modulus if args.lift else params.b - 1
    a = args.a % modulus
    workers = args.workers or default_workers()
    h = None
    if not args.construct_only:
        h = find_happy_in_residue(a, modulus, params, args.max, worker_count=workers)
    if h is not None:
        obj = {"a": a, "modulus": modulus, "witness": h, "params": params.to_json()}
        _emit(args, obj, f"{h} is happy and == {a} mod {modulus}",
              header=("a", "modulus", "witness"), rows=[[a, modulus, h]])
        if args.certify:
            certify_residue(a, params, _strategy(args), lift=args.lift).save(args.certify)
        return EXIT_OK
    if not args.certify:
        if args.format == "text":
            print(f"no happy number == {a} mod {modulus} up to {args.max}; "
                  "use --certify PATH for a constructed witness")
        return EXIT_NOT_FOUND
    cert = certify_residue(a, params, _strategy(args), lift=args.lift)
    cert.save(args.certify)
    n = tn_from_json(cert.goal["n"])
    obj = {"a": a, "modulus": modulus, "witness": cert.goal["n"], "certificate": args.certify}
    _emit(args, obj, f"constructed witness {_show(n)} == {a} mod {modulus}; "
          f"certificate written to {args.certify}",
          header=("a", "modulus", "certificate"), rows=[[a, modulus, args.certify]])
    return EXIT_OK


def cmd_cover(args) -> int:
    params = _params(args)
    D = cycle_set(params)
    workers = args.workers or default_workers()
    h = None
    if not args.construct_only:
        h = find_cover_h(params, D.members, args.max, worker_count=workers)
    if h is not None:
        obj = {"h": h, "set": list(D.members), "params": params.to_json()}
        _emit(args, obj, f"least cover h = {h}", header=("h",), rows=[[h]])
        if args.certify:
            certify_cover(params, _strategy(args)).save(args.certify)
        return EXIT_OK
    cert = certify_cover(params, _strategy(args))
    if args.certify:
        cert.save(args.certify)
    hv = tn_from_json(cert.goal["h"])
    obj = {"h": cert.goal["h"], "set": list(D.members), "constructed": True,
           "certificate": args.certify}
    _emit(args, obj, f"no cover below {args.max}; constructed h = {_show(hv)}",
          header=("constructed", "certificate"), rows=[[True, args.certify or ""]])
    return EXIT_OK


def cmd_certify_run(args) -> int:
    params = _params(args)
    cond = condition_holds(params)
    if not cond:
        print(f"condition fails: p={cond.prime}; every happy number is 1 mod {cond.prime}",
              file=sys.stderr)
        return EXIT_BAD_PARAMS
    cert = certify_run(args.length, params, _strategy(args))
    cert.save(args.out)
    l = tn_from_json(cert.goal["l"])
    obj = {"m": args.length, "l": cert.goal["l"], "path": args.out, "steps": len(cert.steps)}
    _emit(args, obj, f"run of {args.length} after l = {_show(l)}; "
          f"{len(cert.steps)} steps written to {args.out}",
          header=("m", "steps", "path"), rows=[[args.length, len(cert.steps), args.out]])
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        cert = WitnessCertificate.load(args.path)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"unreadable certificate: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    params = None
    if args.e is not None or args.b is not None:
        if args.e is None or args.b is None:
            raise UsageError("give both --e and --b or neither")
        params = _params(args)
    result = verify_certificate(cert, params)
    obj = {"ok": result.ok, "diagnostics": result.diagnostics}
    text = "valid" if result.ok else "invalid\n" + "\n".join(result.diagnostics)
    _emit(args, obj, text, header=("ok", "diagnostics"),
          rows=[[result.ok, "; ".join(result.diagnostics)]])
    return EXIT_OK if result.ok else EXIT_NOT_FOUND


COMMANDS = {
    "check-condition": cmd_check_condition,
    "classify": cmd_classify,
    "cycle-set": cmd_cycle_set,
    "find-runs": cmd_find_runs,
    "residue-witness": cmd_residue_witness,
    "cover": cmd_cover,
    "certify-run": cmd_certify_run,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        with depth_limit(args.depth_limit):
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except ConditionFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DepthLimitExceeded, NotRepresentable) as exc:
        print(f"error: {exc} (try a larger --depth-limit)", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS


if __name__ == "__main__":
    sys.exit(main())
