"""Command-line entry points: solve, check, bench."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .cdcl import INDETERMINATE, OPTIMUM, UNSAT, Solver, SolverConfig
from .checker import check_proof
from .prooflog import ProofLogger
from .wcnf import WcnfError, format_result, parse_wcnf, to_pbo

EXIT = {OPTIMUM: 0, UNSAT: 20, INDETERMINATE: 30}
PROOF_DIR_ENV = "CERTBNB_PROOF_DIR"


def _config(args) -> SolverConfig:
    return SolverConfig(
        seed=args.seed,
        time_limit=args.time_limit,
        conflict_limit=args.conflict_limit,
        mdd_threshold=args.mdd_threshold,
        lookahead_period=args.lookahead_period,
        amo_detect=args.amo_detect == "on",
        restarts=not args.no_restarts,
    )


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None, help="wall-clock seconds")
    p.add_argument("--conflict-limit", type=int, default=None)
    p.add_argument("--mdd-threshold", type=int, default=200,
                   help="encode O <= v*-1 when there are at most this many objective literals (0 disables)")
    p.add_argument("--lookahead-period", type=int, default=1, help="run look-ahead every N search nodes")
    p.add_argument("--amo-detect", choices=["on", "off"], default="on")
    p.add_argument("--no-restarts", action="store_true")


def _read_instance(path: str):
    with open(path) as f:
        return parse_wcnf(f.read())


def cmd_solve(args) -> int:
    try:
        inst = _read_instance(args.instance)
    except (OSError, WcnfError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    pbo = to_pbo(inst)
    proof_path = args.proof
    if proof_path is None and os.environ.get(PROOF_DIR_ENV):
        proof_path = str(Path(os.environ[PROOF_DIR_ENV]) / (Path(args.instance).stem + ".pbp"))
    sink = None
    log = None
    if proof_path is not None:
        try:
            sink = open(proof_path, "w")
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        log = ProofLogger(pbo.formula, sink)
    try:
        res = Solver(pbo, log, _config(args)).solve()
    finally:
        if sink is not None:
            sink.close()
    for v in res.incumbents:
        print(f"o {v}")
    out = format_result(res.status, res.value, res.model, inst.nvars)
    print("\n".join(l for l in out.splitlines() if not l.startswith("o ")))
    if args.verbose:
        for k in sorted(res.stats):
            print(f"c {k} = {res.stats[k]}")
        print(f"c solve_seconds = {res.seconds:.3f}")
        if log is not None:
            print("c proof_lines = " + " ".join(f"{k}:{n}" for k, n in sorted(log.census.items())))
    return EXIT[res.status]


def cmd_check(args) -> int:
    try:
        inst = _read_instance(args.instance)
        with open(args.proof) as f:
            text = f.read()
    except (OSError, WcnfError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    res = check_proof(to_pbo(inst), text, require_conclusion=not args.allow_partial)
    if res.accepted:
        concl = res.conclusion or "none"
        if res.bounds is not None:
            concl += f" {res.bounds[0]} {res.bounds[1]}"
        print(f"s VERIFIED {concl}")
    else:
        print(f"s REJECTED line {res.line}: {res.reason}")
    if args.verbose:
        for k in sorted(res.census):
            print(f"c rule {k} = {res.census[k]}")
        print(f"c check_seconds = {res.seconds:.3f}")
    return 0 if res.accepted else 1


def cmd_bench(args) -> int:
    from .bench import run_bench

    return run_bench(args)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certbnb", description="Certifying branch-and-bound MaxSAT solver")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="solve a WCNF instance")
    p.add_argument("instance")
    p.add_argument("--proof", default=None, help=f"write a proof here (default: ${PROOF_DIR_ENV}/<name>.pbp if set)")
    p.add_argument("--verbose", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="verify a proof against an instance")
    p.add_argument("instance")
    p.add_argument("proof")
    p.add_argument("--allow-partial", action="store_true", help="accept a valid proof without conclusion")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="dual-run benchmark over a directory of instances")
    p.add_argument("directory")
    p.add_argument("--oracle", default=None, help="file with '<name> <optimum|UNSAT>' lines")
    p.add_argument("--fuzz-proofs", action="store_true", help="also run the proof mutation harness")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    code = args.func(args)
    if getattr(args, "verbose", False):
        print(f"c total_seconds = {time.perf_counter() - t0:.3f}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
