"""Independent checker for the pseudo-Boolean proof format.

Only the constraint arithmetic in ``pb`` and the instance reader are shared
with the solver side; no solver or logger state is consulted.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from . import pb
from .pb import PBConstraint, Propagator, lit_var
from .wcnf import PboInstance

HEADER = "pseudo-Boolean proof version 2.0"
FOOTER = "end pseudo-Boolean proof"


class Reject(Exception):
    pass


@dataclass
class CheckResult:
    accepted: bool
    line: Optional[int] = None
    reason: str = ""
    conclusion: Optional[str] = None
    bounds: Optional[tuple[int, int]] = None
    census: Counter = field(default_factory=Counter)
    seconds: float = 0.0

    def __bool__(self) -> bool:
        return self.accepted


class _Sub:
    def __init__(self, c: PBConstraint, first_id: int):
        self.c = c
        self.first_id = first_id
        self.conflict = False
        self.last: Optional[PBConstraint] = None


class Checker:
    def __init__(self, inst: PboInstance):
        self.formula = inst.formula
        self.objective = inst.objective
        self.obj_vars = {lit_var(l) for _, l in inst.objective}
        self.store: dict[int, tuple[PBConstraint, int]] = {}
        self.by_var: dict[int, set[int]] = {}
        self.prop = Propagator()
        # clauses plus formula and improvement constraints; RUP is tried here first,
        # which is sound because propagation over a subset of the store is weaker
        self.fast = Propagator()
        self.fast_ids: dict[int, int] = {}
        self.next_id = 1
        self.best: Optional[int] = None
        self.loaded = False
        self.contradiction = False
        self.sub: Optional[_Sub] = None
        self.census = Counter()
        self.conclusion: Optional[str] = None
        self.bounds: Optional[tuple[int, int]] = None
        self.finished = False

    # -- store -----------------------------------------------------------------
    def _add(self, c: PBConstraint, fast: Optional[bool] = None) -> int:
        if fast is None:
            fast = c.is_clause() or self.sub is not None
        cid = self.next_id
        self.next_id += 1
        pid, conflict = self.prop.add(c)
        self.store[cid] = (c, pid)
        if fast:
            self.fast_ids[cid], fconflict = self.fast.add(c)
            conflict = conflict or fconflict
        for _, l in c.terms:
            self.by_var.setdefault(lit_var(l), set()).add(cid)
        # propagation itself is deferred until a RUP check needs it
        if self.sub is not None:
            if cid > self.sub.first_id:
                self.sub.last = c
            if conflict or c.is_contradiction():
                self.sub.conflict = True
        elif c.is_contradiction():
            self.contradiction = True
        return cid

    def _drop(self, cid: int) -> PBConstraint:
        c, pid = self.store.pop(cid)
        self.prop.remove(pid)
        if cid in self.fast_ids:
            self.fast.remove(self.fast_ids.pop(cid))
        for _, l in c.terms:
            ids = self.by_var.get(lit_var(l))
            if ids is not None:
                ids.discard(cid)
        return c

    def _get(self, tok: str) -> PBConstraint:
        try:
            cid = int(tok)
        except ValueError:
            raise Reject(f"bad token {tok!r}") from None
        if cid not in self.store:
            raise Reject(f"constraint {cid} does not exist")
        return self.store[cid][0]

    def _trivially_conflicting(self) -> bool:
        return self.prop.root_conflict or self.fast.root_conflict or (self.sub is not None and self.sub.conflict)

    # -- reasoning primitives -------------------------------------------------
    def _rup(self, c: PBConstraint, extra: Optional[PBConstraint] = None) -> bool:
        """Does the store (plus ``extra``) together with not-c propagate to conflict?"""
        return self._rup_in(self.fast, c, extra) or self._rup_in(self.prop, c, extra)

    def _rup_in(self, p: Propagator, c: PBConstraint, extra: Optional[PBConstraint]) -> bool:
        if not self._trivially_conflicting() and p.propagate() is not None and self.sub is not None:
            self.sub.conflict = True
        if self._trivially_conflicting():
            return True
        p.push()
        added = []
        conflict = False
        for d in ([extra] if extra is not None else []) + [pb.negate_constraint(c)]:
            pid, conf = p.add(d)
            added.append(pid)
            if conf or p.propagate() is not None:
                conflict = True
                break
        p.pop()
        for pid in reversed(added):
            p.remove(pid)
        return conflict

    # -- rules ----------------------------------------------------------------
    def _pol(self, toks: list[str]) -> PBConstraint:
        # stack entries: int scalars, constraints, or LinearForm running sums
        stack: list = []
        n = len(toks)

        def constraint(x):
            return x.value() if isinstance(x, pb.LinearForm) else x

        def is_c(x):
            return isinstance(x, (PBConstraint, pb.LinearForm))

        for i, t in enumerate(toks):
            if t == "+":
                if len(stack) < 2 or not (is_c(stack[-1]) and is_c(stack[-2])):
                    raise Reject("stack underflow at '+'")
                b = constraint(stack.pop())
                a = stack.pop()
                if not isinstance(a, pb.LinearForm):
                    a = pb.LinearForm(a)
                stack.append(a.add(b))
            elif t in ("*", "d"):
                if len(stack) < 2 or not isinstance(stack[-1], int) or not is_c(stack[-2]):
                    raise Reject(f"stack underflow at {t!r}")
                k = stack.pop()
                a = constraint(stack.pop())
                if k < 1:
                    raise Reject("scalar must be positive")
                stack.append(pb.cp_multiply(a, k) if t == "*" else pb.cp_divide(a, k))
            elif t == "s":
                if not stack or not is_c(stack[-1]):
                    raise Reject("stack underflow at 's'")
                stack.append(pb.cp_saturate(constraint(stack.pop())))
            elif t.startswith("x") or t.startswith("~"):
                try:
                    stack.append(pb.cp_literal_axiom(pb.parse_lit(t)))
                except ValueError as e:
                    raise Reject(str(e)) from None
            elif i + 1 < n and toks[i + 1] in ("*", "d"):
                try:
                    stack.append(int(t))
                except ValueError:
                    raise Reject(f"bad scalar {t!r}") from None
            else:
                stack.append(self._get(t))
        if len(stack) != 1 or not is_c(stack[0]):
            raise Reject("pol expression must leave exactly one constraint")
        return constraint(stack[0])

    def _red(self, c: PBConstraint, rest: list[str]) -> Optional[PBConstraint]:
        """Handle the part after the constraint; returns c if it can be stored now."""
        if rest == ["begin"]:
            if self.sub is not None:
                raise Reject("nested subproofs are not supported")
            self.prop.push()
            self.fast.push()
            self.sub = _Sub(c, self.next_id)
            self._add(pb.negate_constraint(c))
            return None
        if not rest:
            raise Reject("empty witness requires a contradiction subproof")
        if len(rest) != 3 or rest[1] != "->" or rest[2] not in ("0", "1"):
            raise Reject("witness must be 'x<k> -> 0|1'")
        try:
            lit = pb.parse_lit(rest[0])
        except ValueError as e:
            raise Reject(str(e)) from None
        if lit < 0:
            raise Reject("witness must name a variable")
        if self.sub is not None:
            raise Reject("witness steps inside subproofs are not supported")
        v = lit
        if v in self.obj_vars:
            raise Reject("witness variable occurs in the objective")
        omega = {v: rest[2] == "1"}
        neg = pb.negate_constraint(c)
        goals = [c.restrict(omega)]
        for cid in sorted(self.by_var.get(v, ())):
            goals.append(self.store[cid][0].restrict(omega))
        for g in goals:
            if g.is_tautology() or pb.implies(neg, g):
                continue
            if not self._rup(g, extra=neg):
                raise Reject("redundance condition not established for witness")
        return c

    def _soli(self, toks: list[str]) -> PBConstraint:
        if self.sub is not None:
            raise Reject("soli inside subproof")
        val: dict[int, bool] = {}
        for t in toks:
            try:
                l = pb.parse_lit(t)
            except ValueError as e:
                raise Reject(str(e)) from None
            v = lit_var(l)
            if v in val and val[v] != (l > 0):
                raise Reject("contradictory solution literals")
            val[v] = l > 0
        for cid, (c, _) in self.store.items():
            if not c.satisfied_by(val):
                raise Reject(f"solution violates constraint {cid}")
        value = sum(a for a, l in self.objective if val.get(lit_var(l), False) == (l > 0))
        if self.best is not None and value >= self.best:
            raise Reject(f"solution value {value} does not improve on {self.best}")
        self.best = value
        return pb.normalize(self.objective, "<=", value - 1)

    def _conclusion(self, toks: list[str]) -> None:
        if self.sub is not None:
            raise Reject("conclusion inside subproof")
        if toks == ["UNSAT"]:
            if self.best is not None:
                raise Reject("UNSAT claimed after a solution was logged")
            if not self.contradiction:
                raise Reject("UNSAT claimed without a derived contradiction")
            self.conclusion = "UNSAT"
            return
        if len(toks) != 3 or toks[0] != "BOUNDS":
            raise Reject("unsupported conclusion")
        try:
            lb, ub = int(toks[1]), int(toks[2])
        except ValueError:
            raise Reject("bad bounds") from None
        if lb != ub:
            raise Reject("only exact optimality conclusions are supported")
        if self.best is None or ub != self.best:
            raise Reject("upper bound does not match the best logged solution")
        if not self.contradiction:
            raise Reject("lower bound not justified by a contradiction")
        self.conclusion = "BOUNDS"
        self.bounds = (lb, ub)

    # -- driver ---------------------------------------------------------------
    def step(self, line: str) -> None:
        toks = line.split()
        if not toks or toks[0].startswith("*"):
            return
        if self.finished:
            raise Reject("content after end of proof")
        kind = toks[0]
        if not self.loaded and kind != "f":
            raise Reject("formula must be loaded first")
        self.census[kind] += 1
        if kind == "f":
            if self.loaded or len(toks) != 2 or toks[1] != str(len(self.formula)):
                raise Reject("formula size mismatch")
            for c in self.formula:
                self._add(c, fast=True)
            self.loaded = True
        elif kind == "pol":
            args = toks[1:]
            if args and args[-1] == ";":
                args = args[:-1]
            self._add(self._pol(args))
        elif kind == "rup":
            c = self._parse(toks[1:], exact=True)[0]
            if not self._rup(c):
                raise Reject("constraint is not RUP")
            self._add(c)
        elif kind == "red":
            c, used = self._parse(toks[1:])
            rest = toks[1 + used:]
            if rest and rest[0] == ";":
                rest = rest[1:]
            out = self._red(c, rest)
            if out is not None:
                self._add(out)
        elif kind == "end" and len(toks) == 1:
            if self.sub is None:
                raise Reject("'end' without subproof")
            sub = self.sub
            if sub.last is None or not sub.last.is_contradiction():
                raise Reject("subproof does not end in a contradiction")
            self.prop.pop()
            self.fast.pop()
            for cid in range(self.next_id - 1, sub.first_id - 1, -1):
                self._drop(cid)
            self.sub = None
            self._add(sub.c)
        elif kind == "soli":
            self._add(self._soli(toks[1:]), fast=True)
        elif kind == "del":
            if len(toks) != 3 or toks[1] != "id" or self.sub is not None:
                raise Reject("bad deletion")
            self._get(toks[2])
            self._drop(int(toks[2]))
            for p in (self.prop, self.fast):
                p.rebuild()
                p.propagate()
        elif kind == "output":
            if toks[1:] != ["NONE"]:
                raise Reject("unsupported output section")
        elif kind == "conclusion":
            self._conclusion(toks[1:])
        elif line.split() == FOOTER.split():
            if self.conclusion is None:
                raise Reject("proof ends without conclusion")
            self.finished = True
        else:
            raise Reject(f"unknown rule {kind!r}")

    @staticmethod
    def _parse(toks: list[str], exact: bool = False) -> tuple[PBConstraint, int]:
        try:
            c, used = pb.parse_constraint_tokens(toks)
        except ValueError as e:
            raise Reject(str(e)) from None
        if exact and used != len(toks):
            raise Reject("trailing tokens")
        return c, used


def check_proof(inst: PboInstance, text: str, require_conclusion: bool = True) -> CheckResult:
    """Verify ``text`` against ``inst``.

    With ``require_conclusion=False`` a valid prefix without conclusion is
    accepted (used for runs that stopped on a resource limit).
    """
    t0 = time.perf_counter()
    chk = Checker(inst)
    lines = text.splitlines()
    lineno = 0
    try:
        body = [(i, l) for i, l in enumerate(lines, 1) if l.strip() and not l.lstrip().startswith("*")]
        if not body or body[0][1].split() != HEADER.split():
            lineno = body[0][0] if body else 1
            raise Reject("missing proof header")
        for lineno, line in body[1:]:
            chk.step(line)
        lineno = len(lines)
        # an open subproof adds nothing to the store, so a partial prefix may end inside one
        if chk.sub is not None and require_conclusion:
            raise Reject("unterminated subproof")
        if require_conclusion and not chk.finished:
            raise Reject("proof has no conclusion")
    except Reject as e:
        return CheckResult(False, lineno, str(e), census=chk.census, seconds=time.perf_counter() - t0)
    return CheckResult(True, None, "", chk.conclusion, chk.bounds, chk.census, time.perf_counter() - t0)
