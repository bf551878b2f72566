"""Single-token proof mutations judged by an exhaustive semantic oracle.

A mutation is *unsound* when the mutated step would add a constraint (or a
claim) that is not justified semantically: for derivation steps, some model
of the current constraint set violates the new constraint; for witness steps,
the witness fails to map some counter-model to a model; for solutions, the
assignment is not an improving model; for conclusions, the bounds exclude the
true optimum.  A mutation is *invalid* when the step no longer parses or
refers to constraints that do not exist.  Both kinds must be rejected.
Everything else is a *benign* mutation (for example a different but still
entailed constraint) and is not counted.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import pb
from .checker import check_proof
from .gen import all_assignments, constraint_mask
from .pb import PBConstraint, lit_var
from .wcnf import PboInstance

_INT = re.compile(r"^[+-]?\d+$")
_LIT = re.compile(r"^~?x\d+$")


@dataclass
class Mutation:
    line: int  # index into the proof's line list
    text: str  # replacement line
    kind: str = ""  # unsound | invalid | benign
    rejected: Optional[bool] = None


@dataclass
class FuzzReport:
    counts: Counter = field(default_factory=Counter)  # (kind, rejected) -> n
    cosmetic_total: int = 0
    cosmetic_accepted: int = 0
    failures: list[str] = field(default_factory=list)

    def merge(self, other: "FuzzReport") -> None:
        self.counts.update(other.counts)
        self.cosmetic_total += other.cosmetic_total
        self.cosmetic_accepted += other.cosmetic_accepted
        self.failures += other.failures

    @property
    def semantic(self) -> int:
        return sum(n for (k, _), n in self.counts.items() if k in ("unsound", "invalid"))

    @property
    def semantic_rejected(self) -> int:
        return sum(n for (k, r), n in self.counts.items() if k in ("unsound", "invalid") and r)


def proof_vars(inst: PboInstance, text: str) -> int:
    n = inst.nvars
    for m in re.finditer(r"x(\d+)", text):
        n = max(n, int(m.group(1)))
    return n


def token_mutations(line: str, rng: random.Random, k: int) -> list[str]:
    """Up to ``k`` distinct single-token variants of ``line``."""
    toks = line.split()
    if not toks or toks[0] in ("*", "end", "output") or line.startswith("pseudo-Boolean"):
        return []
    opts: list[tuple[int, str]] = []
    for i, t in enumerate(toks[1:], 1):
        if _LIT.match(t):
            neg = t.startswith("~")
            opts.append((i, t[1:] if neg else "~" + t))
            v = int(t.lstrip("~x")) + rng.choice([-1, 1])
            if v > 0:
                opts.append((i, ("~" if neg else "") + f"x{v}"))
        elif _INT.match(t):
            if toks[0] == "red" and toks[i - 1] == "->":
                opts.append((i, "1" if t == "0" else "0"))
                continue
            v = int(t)
            alts = {v + 1, v - 1, v + rng.randint(2, 9), -v} - {v}
            signed = t[0] in "+-"
            opts += [(i, f"{a:+d}" if signed else str(a)) for a in sorted(alts)]
    rng.shuffle(opts)
    out: list[str] = []
    for i, o in opts:
        s = " ".join(toks[:i] + [o] + toks[i + 1:])
        if s not in out:
            out.append(s)
        if len(out) >= k:
            break
    return out


def cosmetic_mutations(lines: list[str], rng: random.Random, k: int) -> list[list[str]]:
    out = []
    for _ in range(k):
        new = list(lines)
        i = rng.randrange(len(new))
        op = rng.randrange(5)
        if op == 0:
            new.insert(i + 1, "* " + rng.choice(["note", "checkpoint", "x1 + 2 d"]))
        elif op == 1:
            new.insert(i + 1, "")
        elif op == 2:
            new[i] = "  ".join(new[i].split(" "))
        elif op == 3:
            new[i] = new[i] + rng.choice([" ", "\t", "  "])
        else:
            new[i] = "\t".join(new[i].split(" ")) if rng.random() < 0.5 else " " + new[i]
        out.append(new)
    return out


class _Invalid(Exception):
    pass


class SemanticOracle:
    """Tracks the models of the current constraint set by exhaustive enumeration."""

    def __init__(self, inst: PboInstance, nvars: int):
        self.A = all_assignments(nvars)
        self.n = nvars
        self.inst = inst
        self.obj_vars = {lit_var(l) for _, l in inst.objective}
        cost = np.zeros(self.A.shape[0], dtype=np.int64)
        for a, l in inst.objective:
            col = self.A[:, lit_var(l)]
            cost += a * (col if l > 0 else ~col)
        self.cost = cost
        self.cons: dict[int, PBConstraint] = {}
        self.masks: dict[int, np.ndarray] = {}
        self.D = np.ones(self.A.shape[0], dtype=bool)
        self.next_id = 1
        self.best: Optional[int] = None
        self.sub: Optional[tuple[PBConstraint, int]] = None

    def mask(self, c: PBConstraint) -> np.ndarray:
        return constraint_mask(self.A, c)

    def _store(self, c: PBConstraint) -> None:
        m = self.mask(c)
        self.cons[self.next_id] = c
        self.masks[self.next_id] = m
        self.next_id += 1
        self.D &= m

    def _recompute(self) -> None:
        self.D = np.ones(self.A.shape[0], dtype=bool)
        for m in self.masks.values():
            self.D &= m

    # -- evaluation helpers ----------------------------------------------------
    def _constraint(self, toks: list[str]) -> tuple[PBConstraint, list[str]]:
        try:
            c, used = pb.parse_constraint_tokens(toks)
        except ValueError:
            raise _Invalid() from None
        return c, toks[used:]

    def _pol(self, toks: list[str]) -> PBConstraint:
        if toks and toks[-1] == ";":
            toks = toks[:-1]
        st: list = []
        for i, t in enumerate(toks):
            if t == "+":
                if len(st) < 2 or isinstance(st[-1], int) or isinstance(st[-2], int):
                    raise _Invalid()
                b, a = st.pop(), st.pop()
                st.append(pb.cp_add(a, b))
            elif t in ("*", "d"):
                if len(st) < 2 or not isinstance(st[-1], int) or isinstance(st[-2], int) or st[-1] < 1:
                    raise _Invalid()
                k, a = st.pop(), st.pop()
                st.append(pb.cp_multiply(a, k) if t == "*" else pb.cp_divide(a, k))
            elif t == "s":
                if not st or isinstance(st[-1], int):
                    raise _Invalid()
                st.append(pb.cp_saturate(st.pop()))
            elif _LIT.match(t):
                st.append(pb.cp_literal_axiom(pb.parse_lit(t)))
            elif _INT.match(t):
                if i + 1 < len(toks) and toks[i + 1] in ("*", "d"):
                    st.append(int(t))
                elif int(t) in self.cons:
                    st.append(self.cons[int(t)])
                else:
                    raise _Invalid()
            else:
                raise _Invalid()
        if len(st) != 1 or isinstance(st[0], int):
            raise _Invalid()
        return st[0]

    def _soli_index(self, toks: list[str]) -> int:
        val = {}
        for t in toks:
            if not _LIT.match(t):
                raise _Invalid()
            l = pb.parse_lit(t)
            if lit_var(l) in val and val[lit_var(l)] != (l > 0):
                raise _Invalid()
            val[lit_var(l)] = l > 0
        if any(v > self.n for v in val):
            raise _Invalid()
        return sum(1 << (v - 1) for v, b in val.items() if b)

    # -- judging a (possibly mutated) line against the current state -------------
    def judge(self, line: str) -> str:
        toks = line.split()
        try:
            return self._judge(toks)
        except (_Invalid, ValueError):
            return "invalid"

    def _entailed(self, c: PBConstraint) -> bool:
        return not (self.D & ~self.mask(c)).any()

    def _judge(self, toks: list[str]) -> str:
        kind = toks[0]
        if kind == "f":
            if toks[1:] != [str(len(self.inst.formula))]:
                raise _Invalid()
            return "benign"
        if kind == "pol":
            c = self._pol(toks[1:])
            return "benign" if self._entailed(c) else "unsound"
        if kind == "rup":
            c, rest = self._constraint(toks[1:])
            if rest:
                raise _Invalid()
            return "benign" if self._entailed(c) else "unsound"
        if kind == "red":
            c, rest = self._constraint(toks[1:])
            if rest and rest[0] == ";":
                rest = rest[1:]
            if rest == ["begin"]:
                if self.sub is not None:
                    raise _Invalid()
                return "benign" if self._entailed(c) else "unsound"
            if len(rest) != 3 or rest[1] != "->" or rest[2] not in ("0", "1") or not _LIT.match(rest[0]) \
                    or rest[0].startswith("~") or self.sub is not None:
                raise _Invalid()
            v = int(rest[0][1:])
            if v in self.obj_vars or v > self.n:
                raise _Invalid()
            cm = self.mask(c)
            bad = np.nonzero(self.D & ~cm)[0]
            if bad.size == 0:
                return "benign"
            bit = 1 << (v - 1)
            mapped = (bad | bit) if rest[2] == "1" else (bad & ~bit)
            good = (self.D & cm)[mapped]
            return "benign" if good.all() else "unsound"
        if kind == "soli":
            if self.sub is not None:
                raise _Invalid()
            idx = self._soli_index(toks[1:])
            if not self.D[idx]:
                return "unsound"
            if self.best is not None and self.cost[idx] >= self.best:
                return "unsound"
            return "benign"
        if kind == "del":
            if len(toks) != 3 or toks[1] != "id" or not _INT.match(toks[2]) or int(toks[2]) not in self.cons:
                raise _Invalid()
            return "benign"
        if kind == "conclusion":
            if toks[1:2] == ["BOUNDS"] and len(toks) == 4:
                lb, ub = int(toks[2]), int(toks[3])
                opt = self._optimum()
                if opt is None or lb > opt or ub < opt:
                    return "unsound"
                return "benign"
            raise _Invalid()
        return "benign"

    def _optimum(self) -> Optional[int]:
        ok = np.ones(self.A.shape[0], dtype=bool)
        for c in self.inst.formula:
            ok &= self.mask(c)
        return int(self.cost[ok].min()) if ok.any() else None

    # -- applying an accepted original line --------------------------------------
    def apply(self, line: str) -> None:
        toks = line.split()
        kind = toks[0]
        if kind == "f":
            for c in self.inst.formula:
                self._store(c)
        elif kind == "pol":
            self._store(self._pol(toks[1:]))
        elif kind == "rup":
            self._store(self._constraint(toks[1:])[0])
        elif kind == "red":
            c, rest = self._constraint(toks[1:])
            if rest and rest[0] == ";":
                rest = rest[1:]
            if rest == ["begin"]:
                self.sub = (c, self.next_id)
                self._store(pb.negate_constraint(c))
            else:
                self._store(c)
        elif kind == "end" and len(toks) == 1:
            c, first = self.sub
            for i in range(first, self.next_id):
                self.cons.pop(i, None)
                self.masks.pop(i, None)
            self.sub = None
            self._recompute()
            self._store(c)
        elif kind == "soli":
            idx = self._soli_index(toks[1:])
            self.best = int(self.cost[idx])
            self._store(pb.normalize(self.inst.objective, "<=", self.best - 1))
        elif kind == "del":
            cid = int(toks[2])
            self.cons.pop(cid, None)
            self.masks.pop(cid, None)
            self._recompute()


def fuzz_proof(inst: PboInstance, text: str, rng: random.Random, per_line: int = 2,
               max_mutations: int = 200, cosmetic: int = 20, max_vars: int = 16) -> FuzzReport:
    """Mutate an accepted proof and check every mutant with the checker."""
    rep = FuzzReport()
    lines = text.splitlines()
    nv = proof_vars(inst, text)
    if nv > max_vars:
        return rep
    # one spare column: renaming mutations may reach a fresh variable
    oracle = SemanticOracle(inst, nv + 1)
    muts: list[Mutation] = []
    for i, line in enumerate(lines):
        s = line.strip()
        if not s or s.startswith("*") or s.startswith("pseudo-Boolean") or s.startswith("end pseudo"):
            continue
        for new in token_mutations(s, rng, per_line):
            muts.append(Mutation(i, new, oracle.judge(new)))
        oracle.apply(s)
    interesting = [m for m in muts if m.kind != "benign"]
    rng.shuffle(interesting)
    for m in interesting[:max_mutations]:
        mutated = lines[:m.line] + [m.text] + lines[m.line + 1:]
        m.rejected = not check_proof(inst, "\n".join(mutated)).accepted
        rep.counts[m.kind, m.rejected] += 1
        if not m.rejected:
            rep.failures.append(f"line {m.line + 1}: {lines[m.line]!r} -> {m.text!r} ({m.kind}) accepted")
    for new in cosmetic_mutations(lines, rng, cosmetic):
        rep.cosmetic_total += 1
        rep.cosmetic_accepted += bool(check_proof(inst, "\n".join(new)).accepted)
    return rep
