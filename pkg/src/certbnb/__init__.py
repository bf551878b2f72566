"""Certifying branch-and-bound MaxSAT solver with an integrated proof checker."""

from .cdcl import INDETERMINATE, OPTIMUM, UNSAT, SolveResult, Solver, SolverConfig
from .checker import CheckResult, check_proof
from .prooflog import ProofLogger
from .wcnf import MaxSatInstance, PboInstance, parse_wcnf, to_pbo

__all__ = [
    "CheckResult", "INDETERMINATE", "MaxSatInstance", "OPTIMUM", "PboInstance", "ProofLogger",
    "SolveResult", "Solver", "SolverConfig", "UNSAT", "check_proof", "parse_wcnf", "solve", "to_pbo",
]


def solve(inst: MaxSatInstance, config: SolverConfig | None = None, proof: bool = False):
    """Solve a MaxSAT instance; returns ``(result, proof_text or None)``."""
    pbo = to_pbo(inst)
    log = ProofLogger(pbo.formula) if proof else None
    res = Solver(pbo, log, config).solve()
    return res, (log.text() if log is not None else None)
