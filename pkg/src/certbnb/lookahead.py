"""Look-ahead bounding with weighted local cores.

The look-ahead runs on a scratch decision level above the current trail, so
the search state is restored by a single backtrack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:  # pragma: no cover
    from .cdcl import Solver


@dataclass
class WeightedLocalCore:
    w: int
    R: frozenset  # literals of the current trail
    K: frozenset  # negated objective literals
    cid: Optional[int] = None  # proof id of the core clause; None for trivial or unlogged cores

    def clause(self) -> list[int]:
        return sorted({-l for l in self.R} | {-l for l in self.K}, key=abs)


class CoreSet:
    """O-compatible core collection with residual weights."""

    def __init__(self, cost: dict[int, int]):
        self.cost = cost
        self.residual = dict(cost)
        self.cores: list[WeightedLocalCore] = []
        self.weight = 0

    def core_weight(self, K) -> int:
        return min(self.residual[-k] for k in K)

    def add(self, q: WeightedLocalCore) -> None:
        for k in q.K:
            r = self.residual[-k] - q.w
            if r < 0:
                raise ValueError("core would break O-compatibility")
            self.residual[-k] = r
        self.cores.append(q)
        self.weight += q.w

    def add_trivial(self, lit: int) -> None:
        self.add(WeightedLocalCore(self.residual[lit], frozenset([lit]), frozenset([-lit])))

    def charged(self) -> dict[int, int]:
        out = {l: 0 for l in self.cost}
        for q in self.cores:
            for k in q.K:
                out[-k] += q.w
        return out

    def compatible(self) -> bool:
        ch = self.charged()
        return all(ch[l] <= self.cost[l] and self.residual[l] == self.cost[l] - ch[l] for l in self.cost)

    def reasons(self) -> list[int]:
        """Literals of clause_C: negations of all reason literals."""
        return sorted({-l for q in self.cores for l in q.R}, key=abs)


@dataclass
class LookaheadResult:
    kind: str  # "soft_conflict" | "hardening" | "none"
    clause: list[int] = field(default_factory=list)
    hardenings: list[list[int]] = field(default_factory=list)
    cores: Optional[CoreSet] = None


def improve_core(s: "Solver", start: list[int], scratch: int, extra_k=()) -> tuple[set[int], set[int]]:
    """Resolve the conflicting clause back through the scratch level.

    ``start`` holds false literals.  Literals from levels between 1 and the
    current search level become ``R`` (as the true trail literals), scratch
    assumptions end up in ``K``.
    """
    seen: set[int] = set()
    R: set[int] = set()
    K: set[int] = set(extra_k)

    def visit(q: int) -> None:
        v = abs(q)
        lv = s.level[v]
        if lv == scratch:
            seen.add(v)
        elif lv > 0:
            R.add(-q)

    for q in start:
        visit(q)
    lo = s.trail_lim[scratch - 1]
    for i in range(len(s.trail) - 1, lo - 1, -1):
        p = s.trail[i]
        v = abs(p)
        if v not in seen:
            continue
        r = s.reason[v]
        if r < 0:
            K.add(p)
        else:
            for q in s.clauses[r]:
                if q != p:
                    visit(q)
    return R, K


def lookahead(s: "Solver") -> LookaheadResult:
    vstar = s.vstar
    if vstar is None:
        return LookaheadResult("none")
    cs = CoreSet(s.cost)
    for l in s.obj_lits:
        if s.value(l) > 0:
            cs.add_trivial(l)
    base = s.decision_level()
    scratch = base + 1
    while cs.weight < vstar:
        order = sorted((l for l in s.obj_lits if s.value(l) == 0 and cs.residual[l] > 0),
                       key=lambda l: (-cs.residual[l], abs(l)))
        if not order:
            break
        s.new_level()
        found = None
        for l in order:
            if s.value(l) != 0:
                continue
            mark = len(s.trail)
            s.enqueue(-l, -1)
            confl = s.propagate()
            s.stats["lookahead_props"] += 1
            if confl is not None:
                found = (list(s.clauses[confl]), ())
                break
            for p in s.trail[mark:]:
                if cs.residual.get(p, 0) > 0:
                    r = s.reason[abs(p)]
                    found = ([q for q in s.clauses[r] if q != p], (-p,))
                    break
            if found:
                break
        if found is None:
            s.backtrack(base)
            break
        R, K = improve_core(s, found[0], scratch, found[1])
        s.backtrack(base)
        w = cs.core_weight(K)
        q = WeightedLocalCore(w, frozenset(R), frozenset(K))
        if s.log is not None:
            q.cid = s.log.rup_clause(q.clause())
        cs.add(q)
        s.stats["cores"] += 1
    ids = [(q.cid or None, q.w) for q in cs.cores]
    if cs.weight >= vstar:
        lits = cs.reasons()
        if s.log is not None:
            s.log.derive_core_bound(ids, cs.residual, lits)
        s.stats["soft_conflicts"] += 1
        return LookaheadResult("soft_conflict", lits, cores=cs)
    hard = []
    base_lits = cs.reasons()
    for l in s.obj_lits:
        r = cs.residual[l]
        if r > 0 and s.value(l) == 0 and r + cs.weight >= vstar:
            lits = sorted(set(base_lits) | {-l}, key=abs)
            if s.log is not None:
                s.log.derive_core_bound(ids, cs.residual, lits, skip=l)
            hard.append(lits)
    if hard:
        s.stats["hardenings"] += len(hard)
        return LookaheadResult("hardening", hardenings=hard, cores=cs)
    return LookaheadResult("none", cores=cs)
