"""Dual-run benchmark harness: logging off vs on, then check each proof."""

from __future__ import annotations

import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .cdcl import OPTIMUM, UNSAT, Solver, SolverConfig
from .checker import check_proof
from .fuzz import FuzzReport, fuzz_proof
from .prooflog import ProofLogger
from .wcnf import parse_wcnf, to_pbo


@dataclass
class RunReport:
    name: str
    outcome: str = "ERROR"
    optimum: Optional[int] = None
    outcome_off: str = "ERROR"
    optimum_off: Optional[int] = None
    t_off: float = 0.0
    t_on: float = 0.0
    proof_bytes: int = 0
    census: dict = field(default_factory=dict)
    t_check: float = 0.0
    verdict: Optional[str] = None
    conclusion: Optional[str] = None
    oracle: Optional[str] = None
    error: str = ""

    @property
    def consistent(self) -> bool:
        return self.outcome == self.outcome_off and self.optimum == self.optimum_off

    @property
    def answer(self) -> str:
        if self.outcome == OPTIMUM:
            return str(self.optimum)
        return "UNSAT" if self.outcome == UNSAT else self.outcome

    @property
    def oracle_ok(self) -> Optional[bool]:
        return None if self.oracle is None else self.oracle == self.answer

    def record(self) -> str:
        census = ",".join(f"{k}:{n}" for k, n in sorted(self.census.items())) or "-"
        parts = [
            f"instance={self.name}", f"outcome={self.outcome}",
            f"optimum={'-' if self.optimum is None else self.optimum}",
            f"t_off={self.t_off:.4f}", f"t_on={self.t_on:.4f}", f"t_check={self.t_check:.4f}",
            f"proof_bytes={self.proof_bytes}", f"census={census}",
            f"verdict={self.verdict or '-'}", f"consistent={int(self.consistent)}",
            f"oracle={self.oracle or '-'}",
        ]
        if self.error:
            parts.append("error=" + self.error.replace(" ", "_"))
        return " ".join(parts)


def read_oracle(path: str) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        toks = line.split()
        if len(toks) >= 2 and not line.startswith("#"):
            out[toks[0]] = toks[1]
    return out


def run_one(path: str, cfg: SolverConfig, fuzz: bool = False, seed: int = 0):
    rep = RunReport(Path(path).name)
    fz = None
    try:
        pbo = to_pbo(parse_wcnf(Path(path).read_text()))
        off = Solver(pbo, None, cfg).solve()
        rep.outcome_off, rep.optimum_off, rep.t_off = off.status, off.value, off.seconds
        log = ProofLogger(pbo.formula)
        on = Solver(pbo, log, cfg).solve()
        rep.outcome, rep.optimum, rep.t_on = on.status, on.value, on.seconds
        text = log.text()
        rep.proof_bytes = len(text.encode())
        rep.census = dict(log.census)
        chk = check_proof(pbo, text)
        rep.t_check = chk.seconds
        rep.verdict = "ACCEPT" if chk.accepted else "REJECT"
        rep.conclusion = chk.conclusion
        if fuzz and chk.accepted:
            fz = fuzz_proof(pbo, text, random.Random(seed))
    except Exception as e:  # recorded per instance, harness keeps going
        rep.error = f"{type(e).__name__}: {e}"
    return rep, fz


def _quantiles(xs: list[float]) -> str:
    if not xs:
        return "median=- q25=- q75=-"
    if len(xs) == 1:
        return f"median={xs[0]:.3f} q25={xs[0]:.3f} q75={xs[0]:.3f}"
    q = statistics.quantiles(xs, n=4, method="inclusive")
    return f"median={statistics.median(xs):.3f} q25={q[0]:.3f} q75={q[2]:.3f}"


def summarize(reports: list[RunReport], fz: Optional[FuzzReport] = None) -> list[str]:
    n = len(reports)
    # tiny instances make solve times noisy; floor the denominator at 1ms
    log_ratio = [r.t_on / max(r.t_off, 1e-3) for r in reports if not r.error]
    check_ratio = [r.t_check / max(r.t_on, 1e-3) for r in reports if r.verdict]
    consistent = sum(r.consistent for r in reports if not r.error)
    accepted = sum(r.verdict == "ACCEPT" for r in reports)
    with_oracle = [r for r in reports if r.oracle is not None]
    lines = [
        f"summary instances={n} errors={sum(bool(r.error) for r in reports)} "
        f"consistent={consistent}/{n} accepted={accepted}/{n} "
        f"oracle_match={sum(bool(r.oracle_ok) for r in with_oracle)}/{len(with_oracle)}",
        "summary logging_overhead " + _quantiles(log_ratio),
        "summary check_ratio " + _quantiles(check_ratio),
    ]
    if fz is not None:
        cos = fz.cosmetic_accepted / fz.cosmetic_total if fz.cosmetic_total else 1.0
        lines.append(f"summary fuzz semantic={fz.semantic} rejected={fz.semantic_rejected} "
                     f"cosmetic={fz.cosmetic_total} cosmetic_accepted={fz.cosmetic_accepted} "
                     f"cosmetic_rate={cos:.4f}")
    return lines


def bench(directory: str, cfg: SolverConfig, oracle: Optional[dict[str, str]] = None, jobs: int = 1,
          fuzz: bool = False, seed: int = 0) -> tuple[list[RunReport], Optional[FuzzReport]]:
    paths = sorted(str(p) for p in Path(directory).glob("*.wcnf"))
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(run_one, paths, [cfg] * len(paths), [fuzz] * len(paths),
                                  [seed + i for i in range(len(paths))]))
    else:
        results = [run_one(p, cfg, fuzz, seed + i) for i, p in enumerate(paths)]
    fz = FuzzReport() if fuzz else None
    reports = []
    for rep, f in results:
        if oracle is not None:
            rep.oracle = oracle.get(rep.name, oracle.get(Path(rep.name).stem))
        if fz is not None and f is not None:
            fz.merge(f)
        reports.append(rep)
    return reports, fz


def run_bench(args) -> int:
    from .cli import _config

    if not Path(args.directory).is_dir():
        print(f"error: not a directory: {args.directory}")
        return 2
    oracle_path = args.oracle
    if oracle_path is None and (Path(args.directory) / "oracle.txt").exists():
        oracle_path = str(Path(args.directory) / "oracle.txt")
    oracle = read_oracle(oracle_path) if oracle_path else None
    t0 = time.perf_counter()
    reports, fz = bench(args.directory, _config(args), oracle, args.jobs, args.fuzz_proofs, args.seed)
    for r in reports:
        print(r.record())
    for line in summarize(reports, fz):
        print(line)
    print(f"summary wall_seconds={time.perf_counter() - t0:.2f}")
    bad = any(r.error or not r.consistent or r.verdict != "ACCEPT" or r.oracle_ok is False for r in reports)
    if fz is not None and fz.semantic_rejected < fz.semantic:
        bad = True
    return 1 if bad else 0
