"""Proof logging in the pseudo-Boolean proof format.

The logger mirrors every constraint it emits, so each derivation is
recomputed locally with the same arithmetic the checker uses.  A derivation
whose result differs from what the caller expects raises ``ProofError``
instead of writing an unsound step.
"""

from __future__ import annotations

import io
from collections import Counter
from typing import Iterable, Optional, TextIO

from . import pb
from .pb import PBConstraint, lit_text, lit_var


class ProofError(RuntimeError):
    pass


class Pol:
    """RPN expression under construction together with its current value."""

    def __init__(self, log: "ProofLogger", cid: int, mult: int = 1):
        self.log = log
        self.tokens: list[str] = []
        self.steps = Counter()
        self._form: Optional[pb.LinearForm] = None
        self._cache: Optional[PBConstraint] = None
        self._push(str(cid), log.get(cid), mult)

    def _push(self, tok: str, c: PBConstraint, mult: int) -> None:
        if mult < 1:
            raise ProofError("non-positive multiplier")
        self.tokens.append(tok)
        if mult != 1:
            self.tokens += [str(mult), "*"]
            self.steps["multiply"] += 1
        if self._form is None:
            self._form = pb.LinearForm(c, mult)
        else:
            self.tokens.append("+")
            self.steps["add"] += 1
            self._form.add(c, mult)
        self._cache = None

    @property
    def value(self) -> PBConstraint:
        if self._cache is None:
            self._cache = self._form.value()
        return self._cache

    def _reset(self, c: PBConstraint) -> None:
        self._form = pb.LinearForm(c)
        self._cache = c

    def add(self, cid: int, mult: int = 1) -> "Pol":
        self._push(str(cid), self.log.get(cid), mult)
        return self

    def axiom(self, lit: int, mult: int = 1) -> "Pol":
        if mult == 0:
            return self
        self.steps["axiom"] += 1
        self._push(lit_text(lit), pb.cp_literal_axiom(lit), mult)
        return self

    def mul(self, k: int) -> "Pol":
        if k != 1:
            self.tokens += [str(k), "*"]
            self.steps["multiply"] += 1
            self._reset(pb.cp_multiply(self.value, k))
        return self

    def div(self, k: int) -> "Pol":
        if k < 1:
            raise ProofError("division by non-positive number")
        if k != 1:
            self.tokens += [str(k), "d"]
            self.steps["divide"] += 1
            self._reset(pb.cp_divide(self.value, k))
        return self

    def div_to_clause(self) -> "Pol":
        """Divide by max(largest coefficient, degree) so a positive degree becomes 1."""
        v = self.value
        k = max([a for a, _ in v.terms] + [v.degree, 1])
        return self.div(k)

    def sat(self) -> "Pol":
        self.tokens.append("s")
        self.steps["saturate"] += 1
        self._reset(pb.cp_saturate(self.value))
        return self

    @property
    def nsteps(self) -> int:
        return sum(self.steps.values())


class ProofLogger:
    """Writes proof lines and keeps an id -> constraint mirror."""

    def __init__(self, formula: list[PBConstraint], sink: Optional[TextIO] = None):
        self.sink = sink if sink is not None else io.StringIO()
        self.db: dict[int, PBConstraint] = {}
        self.next_id = 1
        self.census = Counter()
        self.derivations: list[dict] = []
        self._buf: list[str] = []
        self._sub: list[tuple[PBConstraint, int]] = []
        self.best: Optional[int] = None
        self.sic_id: Optional[int] = None
        self.has_contradiction = False
        self._emit("pseudo-Boolean proof version 2.0")
        self._emit(f"f {len(formula)}")
        for c in formula:
            self._store(c)
        self.n_formula = len(formula)

    # -- plumbing -----------------------------------------------------------
    def _emit(self, line: str) -> None:
        self._buf.append(line)
        if len(self._buf) >= 4096:
            self.flush()

    def flush(self) -> None:
        if self._buf:
            self.sink.write("\n".join(self._buf) + "\n")
            self._buf.clear()
        if hasattr(self.sink, "flush"):
            self.sink.flush()

    def text(self) -> str:
        self.flush()
        return self.sink.getvalue()

    def _store(self, c: PBConstraint) -> int:
        cid = self.next_id
        self.next_id += 1
        self.db[cid] = c
        if c.is_contradiction() and not self._sub:
            self.has_contradiction = True
        return cid

    def get(self, cid: int) -> PBConstraint:
        try:
            return self.db[cid]
        except KeyError:
            raise ProofError(f"reference to unknown constraint {cid}") from None

    # -- rules ----------------------------------------------------------------
    def pol(self, cid: int, mult: int = 1) -> Pol:
        return Pol(self, cid, mult)

    def commit(self, p: Pol, expect: Optional[PBConstraint] = None, kind: str = "pol",
               meta: Optional[dict] = None) -> int:
        if expect is not None and p.value != expect:
            raise ProofError(f"derivation produced {p.value}, expected {expect}")
        self._emit("pol " + " ".join(p.tokens))
        self.census["pol"] += 1
        if meta is not None:
            rec = dict(meta)
            rec.update(kind=kind, steps=p.nsteps, detail=dict(p.steps))
            self.derivations.append(rec)
        return self._store(p.value)

    def rup(self, c: PBConstraint) -> int:
        self._emit("rup " + pb.to_text(c))
        self.census["rup"] += 1
        return self._store(c)

    def rup_clause(self, lits: Iterable[int]) -> int:
        return self.rup(pb.clause(lits))

    def red_witness(self, c: PBConstraint, var: int, value: bool) -> int:
        self._emit(f"red {pb.to_text(c)} x{var} -> {1 if value else 0}")
        self.census["red"] += 1
        return self._store(c)

    def log_reification(self, terms: list[tuple[int, int]], bound: int, v: int) -> tuple[int, int]:
        """Introduce ``v <-> sum(terms) <= bound`` for a fresh variable ``v``."""
        total = sum(a for a, _ in terms)
        fwd = pb.normalize([(total - bound, -v)] + [(-a, l) for a, l in terms], ">=", -bound)
        bwd = pb.normalize([(bound + 1, v)] + list(terms), ">=", bound + 1)
        return self.red_witness(fwd, v, False), self.red_witness(bwd, v, True)

    def begin_contradiction(self, c: PBConstraint) -> int:
        self._emit(f"red {pb.to_text(c)} ; begin")
        self.census["red"] += 1
        nid = self._store(pb.negate_constraint(c))
        self._sub.append((c, nid))
        return nid

    def end_contradiction(self) -> int:
        c, nid = self._sub.pop()
        last = self.db[self.next_id - 1]
        if self.next_id - 1 == nid or not last.is_contradiction():
            raise ProofError("subproof does not end in a contradiction")
        for i in range(nid, self.next_id):
            self.db.pop(i, None)
        self._emit("end")
        return self._store(c)

    def soli(self, lits: list[int], objective: list[tuple[int, int]]) -> int:
        true_lits = set(lits)
        value = sum(c for c, l in objective if l in true_lits)
        if self.best is not None and value >= self.best:
            raise ProofError("solution does not improve")
        self._emit("soli " + " ".join(lit_text(l) for l in lits))
        self.census["soli"] += 1
        self.best = value
        sic = pb.normalize(objective, "<=", value - 1)
        self.sic_id = self._store(sic)
        self.flush()
        return self.sic_id

    def delete(self, cid: int) -> None:
        self._emit(f"del id {cid}")
        self.census["del"] += 1
        self.db.pop(cid, None)

    def comment(self, text: str) -> None:
        self._emit("* " + text)

    def conclude_optimum(self, value: int) -> None:
        if not self.has_contradiction or self.best != value:
            raise ProofError("optimality conclusion without contradiction or matching solution")
        self._emit("output NONE")
        self._emit(f"conclusion BOUNDS {value} {value}")
        self._emit("end pseudo-Boolean proof")
        self.flush()

    def conclude_unsat(self) -> None:
        if not self.has_contradiction or self.best is not None:
            raise ProofError("unsat conclusion without contradiction")
        self._emit("output NONE")
        self._emit("conclusion UNSAT")
        self._emit("end pseudo-Boolean proof")
        self.flush()

    # -- bounding derivations ---------------------------------------------------
    def derive_core_bound(self, core_ids: list[tuple[Optional[int], int]], residual: dict[int, int],
                          expect_lits: list[int], skip: Optional[int] = None) -> int:
        """Cutting-planes derivation of a soft-conflict or hardening clause.

        ``core_ids`` lists ``(clause id, weight)`` per core; trivial cores use
        ``None`` since their clause is a tautology and contributes nothing.
        ``residual`` maps each objective literal to its residual weight and
        ``skip`` is the hardened literal whose axiom is withheld.
        """
        if self.sic_id is None:
            raise ProofError("no solution-improving constraint")
        p = self.pol(self.sic_id)
        for cid, w in core_ids:
            if cid is not None:
                p.add(cid, w)
        for lit, r in residual.items():
            if r > 0 and lit != skip:
                p.axiom(lit, r)
        p.div_to_clause()
        kind = "soft_conflict" if skip is None else "hardening"
        meta = {"n_obj": len(residual), "n_cores": len(core_ids)}
        return self.commit(p, pb.clause(expect_lits), kind=kind, meta=meta)
