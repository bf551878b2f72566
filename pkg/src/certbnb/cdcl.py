"""Branch-and-bound MaxSAT search: CDCL with look-ahead bounding."""

from __future__ import annotations

import heapq
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from . import pb
from .lookahead import lookahead
from .mdd import MddEncoder, greedy_groups
from .pb import lit_var
from .prooflog import ProofLogger
from .wcnf import PboInstance

OPTIMUM = "OPTIMUM"
UNSAT = "UNSAT"
INDETERMINATE = "INDETERMINATE"


@dataclass
class SolverConfig:
    seed: int = 0
    conflict_limit: Optional[int] = None
    time_limit: Optional[float] = None
    lookahead_period: int = 1
    mdd_threshold: int = 200
    amo_detect: bool = True
    restarts: bool = True
    reduce_db: bool = True
    log_deletions: bool = False


@dataclass
class SolveResult:
    status: str
    value: Optional[int] = None
    model: Optional[list[bool]] = None  # index 0 unused, covers the PBO variables
    incumbents: list[int] = field(default_factory=list)
    stats: Counter = field(default_factory=Counter)
    seconds: float = 0.0


def luby(i: int) -> int:
    k = 1
    while (1 << k) - 1 < i + 1:
        k += 1
    while True:
        if i + 1 == (1 << k) - 1:
            return 1 << (k - 1)
        if i + 1 >= 1 << (k - 1):
            i -= (1 << (k - 1)) - 1
            k = 1
            while (1 << k) - 1 < i + 1:
                k += 1
        else:  # pragma: no cover
            k -= 1


class _Done(Exception):
    def __init__(self, status: str):
        self.status = status


class Solver:
    """Clausal CDCL search over a PBO instance with clausal formula."""

    def __init__(self, inst: PboInstance, log: Optional[ProofLogger] = None,
                 config: Optional[SolverConfig] = None):
        self.inst = inst
        self.log = log
        self.cfg = config or SolverConfig()
        self.rng = random.Random(self.cfg.seed)
        self.stats = Counter()
        self.nvars = 0
        self.val: list[int] = [0]
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.hidden: set[int] = set()
        self.watches: list[list[int]] = [[], []]
        self.clauses: list[list[int]] = []
        self.learnt: list[bool] = []
        self.lbd: list[int] = []
        self.deleted: list[bool] = []
        self.proof_id: list[Optional[int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.heap: list[tuple[float, int]] = []
        self.in_heap: list[bool] = [False]
        self.var_inc = 1.0
        self.root_conflict = False
        self.cost = dict(inst.cost_of)
        self.obj_lits = [l for _, l in inst.objective]
        self.vstar: Optional[int] = None
        self.best: Optional[dict[int, bool]] = None
        self.incumbents: list[int] = []
        self.mdd: Optional[MddEncoder] = None
        self.n_learnts = 0
        self.max_learnts = 2000
        for _ in range(inst.nvars):
            self.new_var()
        for l in self.obj_lits:
            self.phase[lit_var(l)] = l < 0
        for i, c in enumerate(inst.formula):
            if c.is_tautology():
                continue
            if not c.is_clause():
                raise ValueError("formula constraints must be clauses")
            self.add_clause(c.lits(), learnt=False, proof_id=i + 1)

    # -- variables and values ---------------------------------------------------
    def new_var(self, hidden: bool = False) -> int:
        self.nvars += 1
        v = self.nvars
        self.val.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(self.rng.random() * 1e-5)
        self.phase.append(False)
        self.watches += [[], []]
        self.in_heap.append(False)
        if hidden:
            self.hidden.add(v)
        else:
            self._heap_insert(v)
        return v

    def _heap_insert(self, v: int) -> None:
        # lazy heap: an entry is current iff its key equals the activity
        heapq.heappush(self.heap, (-self.activity[v], v))
        self.in_heap[v] = True

    @staticmethod
    def _widx(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def value(self, lit: int) -> int:
        x = self.val[lit if lit > 0 else -lit]
        return x if lit > 0 else -x

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.val[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        lim = self.trail_lim[lvl]
        for i in range(len(self.trail) - 1, lim - 1, -1):
            lit = self.trail[i]
            v = abs(lit)
            self.phase[v] = lit > 0
            self.val[v] = 0
            self.reason[v] = -1
            if not self.in_heap[v] and v not in self.hidden:
                self._heap_insert(v)
        del self.trail[lim:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, lim)

    # -- clause database ----------------------------------------------------------
    def add_clause(self, lits: list[int], learnt: bool, proof_id: Optional[int] = None) -> Optional[int]:
        """Attach a clause and settle its status under the current assignment.

        Returns the index of a falsified clause (a conflict), otherwise None.
        Unit clauses are stored as root facts, backtracking to level 0 first.
        """
        lits = list(dict.fromkeys(lits))
        if any(-l in lits for l in lits):
            return None
        if not lits:
            self.root_conflict = True
            return None
        if len(lits) == 1:
            l = lits[0]
            if self.value(l) < 0 or (self.value(l) > 0 and self.level[abs(l)] > 0):
                self.backtrack(0)
            ci = self._store(lits, learnt, proof_id, watch=False)
            if self.value(l) < 0:
                self.root_conflict = True
            elif self.value(l) == 0:
                self.enqueue(l, ci)
            return None

        def rank(l):
            x = self.value(l)
            return (0, 0) if x >= 0 else (1, -self.level[abs(l)])

        lits.sort(key=rank)
        ci = self._store(lits, learnt, proof_id, watch=True)
        a, b = lits[0], lits[1]
        if self.value(a) < 0:
            return ci
        if self.value(b) < 0 and (self.value(a) == 0 or self.level[abs(a)] > self.level[abs(b)]):
            # asserting at the level of the second literal; may be below the current level
            lvl = self.level[abs(b)]
            if lvl < self.decision_level():
                self.backtrack(lvl)
            self.enqueue(a, ci)
        return None

    def _store(self, lits, learnt, proof_id, watch) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.learnt.append(learnt)
        self.lbd.append(len({self.level[abs(l)] for l in lits}) if learnt else 0)
        self.deleted.append(False)
        self.proof_id.append(proof_id)
        if learnt:
            self.n_learnts += 1
        if watch:
            self.watches[self._widx(-lits[0])].append(ci)
            self.watches[self._widx(-lits[1])].append(ci)
        return ci

    def propagate(self) -> Optional[int]:
        trail = self.trail
        clauses = self.clauses
        watches = self.watches
        val = self.val
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.stats["propagations"] += 1
            ws = watches[2 * p if p > 0 else -2 * p + 1]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                if self.deleted[ci]:
                    continue
                c = clauses[ci]
                if c[0] == -p:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = val[first] if first > 0 else -val[-first]
                if fv > 0:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    q = c[k]
                    if (val[q] if q > 0 else -val[-q]) >= 0:
                        c[1], c[k] = q, c[1]
                        watches[-2 * q if q < 0 else 2 * q + 1].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if fv < 0:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        return ci
                    self.enqueue(first, ci)
            del ws[j:]
        return None

    # -- conflict analysis ------------------------------------------------------------
    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1) if self.in_heap[u]]
            heapq.heapify(self.heap)
        if self.in_heap[v]:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def analyze(self, lits: list[int]) -> tuple[list[int], int]:
        """1UIP learning from a falsified clause whose deepest level is the current one."""
        cur = self.decision_level()
        seen = set()
        learned = [0]
        counter = 0
        clause = lits
        p = 0
        idx = len(self.trail) - 1
        while True:
            for q in clause:
                if q == p:
                    continue
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur:
                    counter += 1
                else:
                    learned.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
        learned[0] = -p
        self.var_inc /= 0.95
        if len(learned) == 1:
            return learned, 0
        bi = max(range(1, len(learned)), key=lambda i: self.level[abs(learned[i])])
        learned[1], learned[bi] = learned[bi], learned[1]
        return learned, self.level[abs(learned[1])]

    def _learn(self, lits: list[int], already_logged: bool = False) -> None:
        """Handle a falsified clause: learn, backjump and assert (or finish at the root)."""
        if not lits:
            raise _Done(self._root_status())
        d = max(self.level[abs(l)] for l in lits)
        if d == 0:
            if self.log is not None and not self.log.has_contradiction:
                self.log.rup(pb.CONTRADICTION)
            raise _Done(self._root_status())
        self.backtrack(d)
        at_d = [l for l in lits if self.level[abs(l)] == d]
        if len(at_d) == 1 and already_logged:
            learned = [at_d[0]] + [l for l in lits if l != at_d[0]]
            bj = max((self.level[abs(l)] for l in learned[1:]), default=0)
            pid = None
        else:
            learned, bj = self.analyze(lits)
            pid = self.log.rup_clause(learned) if self.log is not None else None
        self.stats["learned"] += 1
        self.backtrack(bj)
        self.add_clause(learned, learnt=True, proof_id=pid)
        if self.root_conflict:
            self._finish_root()

    def _root_status(self) -> str:
        return UNSAT if self.vstar is None else OPTIMUM

    def _finish_root(self) -> None:
        if self.log is not None and not self.log.has_contradiction:
            self.log.rup(pb.CONTRADICTION)
        raise _Done(self._root_status())

    # -- solutions and bounds ---------------------------------------------------------
    def _on_solution(self) -> None:
        val = {v: self.val[v] > 0 for v in range(1, self.nvars + 1)}
        formula = self.inst.formula
        for b, fi in self.inst.relax_clause.items():
            if val[b] and any(val[lit_var(l)] == (l > 0) for l in formula[fi].lits() if l != b):
                val[b] = False
        if self.mdd is not None:
            val.update(self.mdd.aux_values(val))
        for v in self.hidden:
            val.setdefault(v, False)
        value = self.inst.objective_value(val)
        if self.vstar is not None and value >= self.vstar:
            raise RuntimeError("total assignment does not improve on the incumbent")
        self.vstar = value
        self.best = val
        self.incumbents.append(value)
        self.stats["solutions"] += 1
        if self.log is not None:
            lits = [v if val[v] else -v for v in range(1, self.nvars + 1)]
            self.log.soli(lits, self.inst.objective)
        if value == 0:
            raise _Done(OPTIMUM)
        if 0 < len(self.obj_lits) <= self.cfg.mdd_threshold:
            self.backtrack(0)
            self._encode_bound()

    def _new_aux(self, hidden: bool) -> int:
        return self.new_var(hidden)

    def _encode_bound(self) -> None:
        if self.mdd is None:
            groups = self._amo_groups() if self.cfg.amo_detect else [[(c, l)] for c, l in self.inst.objective]
            self.mdd = MddEncoder(groups, self._new_aux, self.log)
        sic = self.log.sic_id if self.log is not None else None
        clauses, _ = self.mdd.encode(self.vstar - 1, sic)
        self.stats["mdd_nodes"] = len(self.mdd.nodes)
        for lits in clauses:
            self.add_clause(lits, learnt=False)
            if self.root_conflict:
                self._finish_root()

    def _amo_groups(self) -> list[list[tuple[int, int]]]:
        excl: dict[int, set[int]] = {}
        for l in self.obj_lits:
            if self.value(l) != 0:
                continue
            self.new_level()
            self.enqueue(l, -1)
            if self.propagate() is None:
                excl[l] = {q for q in self.obj_lits if q != l and self.value(q) < 0}
            self.backtrack(0)
        # keep only symmetric exclusions so both pairwise clauses are RUP
        for l, s in excl.items():
            excl[l] = {q for q in s if l in excl.get(q, ())}
        return greedy_groups(self.inst.objective, excl)

    # -- learned clause reduction -------------------------------------------------------
    def _reduce(self) -> None:
        locked = {self.reason[abs(l)] for l in self.trail}
        cand = [ci for ci in range(len(self.clauses))
                if self.learnt[ci] and not self.deleted[ci] and ci not in locked and len(self.clauses[ci]) > 2]
        cand.sort(key=lambda ci: (-self.lbd[ci], -len(self.clauses[ci])))
        for ci in cand[: len(cand) // 2]:
            self.deleted[ci] = True
            self.n_learnts -= 1
            self.stats["deleted"] += 1
            if self.cfg.log_deletions and self.log is not None and self.proof_id[ci] is not None:
                self.log.delete(self.proof_id[ci])
        self.max_learnts = int(self.max_learnts * 1.1)

    # -- decisions ------------------------------------------------------------------------
    def _decide(self) -> bool:
        while self.heap:
            key, v = heapq.heappop(self.heap)
            if not self.in_heap[v] or -key != self.activity[v]:
                continue
            self.in_heap[v] = False
            if self.val[v] == 0:
                self.new_level()
                self.enqueue(v if self.phase[v] else -v, -1)
                self.stats["decisions"] += 1
                return True
        return False

    def _total(self) -> bool:
        return len(self.trail) == self.nvars - len(self.hidden)

    # -- main loop ------------------------------------------------------------------------
    def solve(self) -> SolveResult:
        t0 = time.perf_counter()
        deadline = None if self.cfg.time_limit is None else t0 + self.cfg.time_limit
        try:
            status = self._search(deadline)
        except _Done as d:
            status = d.status
        if self.log is not None:
            if status == OPTIMUM:
                self.log.conclude_optimum(self.vstar)
            elif status == UNSAT:
                self.log.conclude_unsat()
            else:
                self.log.flush()
        model = None
        if self.best is not None:
            model = [False] + [self.best[v] for v in range(1, self.inst.nvars + 1)]
        return SolveResult(status, self.vstar, model, list(self.incumbents), self.stats,
                           time.perf_counter() - t0)

    def _search(self, deadline: Optional[float]) -> str:
        if self.root_conflict:
            self._finish_root()
        restart_idx = 0
        since_restart = 0
        nodes = 0
        period = max(1, self.cfg.lookahead_period)
        while True:
            if deadline is not None and (self.stats["loop"] & 63) == 0 and time.perf_counter() > deadline:
                return INDETERMINATE
            self.stats["loop"] += 1
            confl = self.propagate()
            if self.root_conflict:
                self._finish_root()
            lits = None
            if confl is not None:
                lits = self.clauses[confl]
            elif self.vstar is not None and (self._total() or nodes % period == 0):
                res = lookahead(self)
                if res.kind == "soft_conflict":
                    lits = res.clause
                elif res.kind == "hardening":
                    for h in res.hardenings:
                        ci = self.add_clause(h, learnt=True)
                        if self.root_conflict:
                            self._finish_root()
                        if ci is not None:
                            lits = self.clauses[ci]
                            break
                        if self.propagate() is not None:
                            break
                    if lits is None:
                        continue
            if lits is not None:
                self.stats["conflicts"] += 1
                since_restart += 1
                if self.cfg.conflict_limit is not None and self.stats["conflicts"] > self.cfg.conflict_limit:
                    return INDETERMINATE
                self._learn(list(lits), already_logged=True)
                if self.cfg.reduce_db and self.n_learnts > self.max_learnts:
                    self._reduce()
                if (self.cfg.restarts and self.stats["conflicts"] >= 1000
                        and since_restart >= 100 * luby(restart_idx)):
                    restart_idx += 1
                    since_restart = 0
                    self.stats["restarts"] += 1
                    self.backtrack(0)
                continue
            if self._total():
                self._on_solution()
                continue
            nodes += 1
            if not self._decide():  # pragma: no cover
                self._on_solution()
