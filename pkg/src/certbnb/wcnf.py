"""Weighted MaxSAT instances (2022 WCNF format) and their PB optimization view."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .pb import PBConstraint, clause, lit_var


class WcnfError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class MaxSatInstance:
    hard: list[list[int]] = field(default_factory=list)
    soft: list[tuple[int, list[int]]] = field(default_factory=list)
    nvars: int = 0

    def cost(self, model: Sequence[bool]) -> Optional[int]:
        """Weight of falsified softs, or None if a hard clause is violated.

        ``model[v]`` is the value of variable ``v`` (index 0 unused).
        """

        def sat(cl):
            return any(model[abs(l)] == (l > 0) for l in cl)

        if not all(sat(c) for c in self.hard):
            return None
        return sum(w for w, c in self.soft if not sat(c))


def _parse_clause(toks: list[str], lineno: int) -> list[int]:
    if not toks or toks[-1] != "0":
        raise WcnfError(lineno, "clause must be terminated by 0")
    lits = []
    for t in toks[:-1]:
        try:
            l = int(t)
        except ValueError:
            raise WcnfError(lineno, f"bad literal {t!r}") from None
        if l == 0:
            raise WcnfError(lineno, "0 inside clause")
        lits.append(l)
    return lits


def parse_wcnf(text: str) -> MaxSatInstance:
    inst = MaxSatInstance()
    nv = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if toks[0] == "p":
            raise WcnfError(lineno, "legacy 'p wcnf' header is not supported; use the 2022 format with 'h' for hard clauses")
        if toks[0] == "h":
            lits = _parse_clause(toks[1:], lineno)
            inst.hard.append(lits)
        else:
            try:
                w = int(toks[0])
            except ValueError:
                raise WcnfError(lineno, f"bad weight {toks[0]!r}") from None
            if w <= 0:
                raise WcnfError(lineno, "soft weight must be positive")
            lits = _parse_clause(toks[1:], lineno)
            inst.soft.append((w, lits))
        for l in lits:
            nv = max(nv, abs(l))
    inst.nvars = nv
    return inst


def to_wcnf_text(inst: MaxSatInstance) -> str:
    out = []
    for cl in inst.hard:
        out.append("h " + " ".join(map(str, cl + [0])))
    for w, cl in inst.soft:
        out.append(f"{w} " + " ".join(map(str, cl + [0])))
    return "\n".join(out) + ("\n" if out else "")


@dataclass
class PboInstance:
    """Clausal formula plus linear objective over literals.

    ``objective`` holds ``(cost, lit)`` pairs with distinct variables;
    ``soft_lit[i]`` is the objective literal charged when soft ``i`` is
    falsified (a relaxation variable or the negated unit literal).
    """

    formula: list[PBConstraint]
    objective: list[tuple[int, int]]
    soft_lit: list[int]
    nvars: int
    n_orig: int
    relax: dict[int, int] = field(default_factory=dict)  # relaxation var -> soft index
    relax_clause: dict[int, int] = field(default_factory=dict)  # relaxation var -> formula index

    def __post_init__(self):
        self.cost_of = {l: c for c, l in self.objective}

    def objective_value(self, val) -> int:
        """``val`` maps a variable to its boolean value (missing means 0)."""
        total = 0
        for c, l in self.objective:
            v = val.get(lit_var(l), False) if isinstance(val, dict) else val[lit_var(l)]
            if v == (l > 0):
                total += c
        return total


def to_pbo(inst: MaxSatInstance) -> PboInstance:
    formula = [clause(c) for c in inst.hard]
    cost: dict[int, int] = {}
    soft_lit: list[int] = [0] * len(inst.soft)
    pending = []
    for i, (w, cl) in enumerate(inst.soft):
        lits = set(cl)
        if len(lits) == 1:
            ol = -next(iter(lits))
            if -ol not in cost:
                cost[ol] = cost.get(ol, 0) + w
                soft_lit[i] = ol
                continue
        pending.append(i)
    nv = inst.nvars
    relax = {}
    relax_clause = {}
    for i in pending:
        w, cl = inst.soft[i]
        nv += 1
        relax[nv] = i
        relax_clause[nv] = len(formula)
        formula.append(clause(list(cl) + [nv]))
        cost[nv] = w
        soft_lit[i] = nv
    objective = sorted(((c, l) for l, c in cost.items()), key=lambda t: lit_var(t[1]))
    return PboInstance(formula, objective, soft_lit, nv, inst.nvars, relax, relax_clause)


def format_result(status: str, value: Optional[int] = None, model: Optional[Sequence[bool]] = None,
                  nvars: int = 0) -> str:
    lines = []
    if status == "OPTIMUM":
        lines.append(f"o {value}")
        lines.append("s OPTIMUM FOUND")
        lines.append("v " + "".join("1" if model[v] else "0" for v in range(1, nvars + 1)))
    elif status == "UNSAT":
        lines.append("s UNSATISFIABLE")
    else:
        lines.append("s UNKNOWN")
    return "\n".join(lines)
