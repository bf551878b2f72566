"""Decision-diagram encoding of ``O <= B`` with certified auxiliary variables.

Objective terms are split into layers.  Each layer is a group of literals
known to satisfy an at-most-one constraint (a singleton group is a plain BDD
layer).  Nodes are built by degree-interval dynamic programming, so a node at
layer ``k`` with interval ``[lo, hi]`` represents ``S_k <= d`` for every
``d`` in the interval, where ``S_k`` is the cost of layers ``k..m-1``.

Intervals use ``None`` for an unbounded end: the false leaf has ``lo=None``
and the true leaf has ``hi=None``.
"""

from __future__ import annotations

import bisect
from typing import Callable, Optional

from . import pb
from .pb import lit_var
from .prooflog import ProofError, ProofLogger


class Leaf:
    def __init__(self, name: str, value: bool):
        self.name = name
        self.value = value
        self.var = None

    def __repr__(self) -> str:
        return self.name


TRUE = Leaf("TRUE", True)
FALSE = Leaf("FALSE", False)


class MddNode:
    __slots__ = ("layer", "lo", "hi", "children", "var", "var2", "defs")

    def __init__(self, layer: int, lo: int, hi: int, children: list):
        self.layer = layer
        self.lo = lo
        self.hi = hi
        self.children = children  # (node, lo, hi) per group literal, then the else-child
        self.var: Optional[int] = None
        self.var2: Optional[int] = None
        self.defs: dict[int, tuple[int, int]] = {}

    def __repr__(self) -> str:
        return f"MddNode(layer={self.layer}, [{self.lo},{self.hi}], v={self.var})"


Entry = tuple  # (node or leaf, lo, hi)


def _add(x: Optional[int], c: int) -> Optional[int]:
    return None if x is None else x + c


class Mdd:
    """Reduced ordered MDD for ``sum of layered terms <= d`` with interval memoization."""

    def __init__(self, layers: list[list[tuple[int, int]]]):
        self.layers = layers
        m = len(layers)
        self.m = m
        self.tsum = [sum(c for c, _ in g) for g in layers]
        self.maxc = [max(c for c, _ in g) for g in layers]
        self.T = [0] * (m + 1)
        self.M = [0] * (m + 1)
        for k in range(m - 1, -1, -1):
            self.T[k] = self.T[k + 1] + self.tsum[k]
            self.M[k] = self.M[k + 1] + self.maxc[k]
        self.memo: list[list[tuple[int, int, object]]] = [[] for _ in range(m + 1)]
        self.nodes: list[MddNode] = []

    def suffix_terms(self, k: int) -> list[tuple[int, int]]:
        return [t for g in self.layers[k:] for t in g]

    def build(self, k: int, d: int) -> Entry:
        if d < 0:
            return (FALSE, None, -1)
        if d >= self.M[k]:
            return (TRUE, self.M[k], None)
        memo = self.memo[k]
        i = bisect.bisect_right(memo, d, key=lambda t: t[0]) - 1
        if i >= 0 and memo[i][0] <= d <= memo[i][1]:
            return (memo[i][2], memo[i][0], memo[i][1])
        children = [self.build(k + 1, d - c) for c, _ in self.layers[k]]
        children.append(self.build(k + 1, d))
        los = [_add(e[1], c) for e, (c, _) in zip(children, self.layers[k])] + [children[-1][1]]
        his = [_add(e[2], c) for e, (c, _) in zip(children, self.layers[k])] + [children[-1][2]]
        lo = max(x for x in los if x is not None)
        hi = min(x for x in his if x is not None)
        first = children[0][0]
        if all(e[0] is first for e in children):
            node = first
        else:
            node = MddNode(k, lo, hi, children)
            self.nodes.append(node)
            self.on_new_node(node)
        bisect.insort(memo, (lo, hi, node), key=lambda t: t[0])
        return (node, lo, hi)

    def on_new_node(self, node: MddNode) -> None:
        pass

    # -- semantics helpers used by tests ----------------------------------------
    def suffix_value(self, k: int, val: dict[int, bool]) -> int:
        return sum(c for c, l in self.suffix_terms(k) if val.get(lit_var(l), False) == (l > 0))

    def evaluate(self, entry: Entry, k: int, val: dict[int, bool]) -> bool:
        """Follow the diagram from ``entry`` (seen at layer ``k``) under ``val``."""
        node = entry[0]
        while isinstance(node, MddNode):
            # skipped layers below node.layer do not influence the function
            g = self.layers[node.layer]
            taken = [i for i, (_, l) in enumerate(g) if val.get(lit_var(l), False) == (l > 0)]
            if len(taken) > 1:
                raise ValueError("assignment violates an at-most-one group")
            node = node.children[taken[0] if taken else -1][0]
        return node.value

    def amo_ok(self, val: dict[int, bool]) -> bool:
        for g in self.layers:
            if sum(1 for _, l in g if val.get(lit_var(l), False) == (l > 0)) > 1:
                return False
        return True


def order_layers(groups: list[list[tuple[int, int]]]) -> list[list[tuple[int, int]]]:
    """Descending cost inside each group, groups by descending max cost, ties by variable."""
    out = [sorted(g, key=lambda t: (-t[0], lit_var(t[1]))) for g in groups]
    out.sort(key=lambda g: (-g[0][0], lit_var(g[0][1])))
    return out


def greedy_groups(objective: list[tuple[int, int]], excl: dict[int, set[int]]) -> list[list[tuple[int, int]]]:
    """Greedy clique partition over the "mutually exclusive" relation, by descending cost."""
    order = sorted(objective, key=lambda t: (-t[0], lit_var(t[1])))
    used = set()
    groups = []
    for c, l in order:
        if l in used:
            continue
        g = [(c, l)]
        used.add(l)
        for c2, l2 in order:
            if l2 in used:
                continue
            if all(l2 in excl.get(x, ()) for _, x in g):
                g.append((c2, l2))
                used.add(l2)
        groups.append(g)
    return groups


class MddEncoder(Mdd):
    """Builds the diagram, allocates node variables and certifies everything.

    ``new_var(hidden)`` allocates a fresh variable; hidden ones only appear in
    the proof.  With ``log=None`` nothing is certified but the clauses and
    variable numbering are identical.
    """

    def __init__(self, groups: list[list[tuple[int, int]]], new_var: Callable[[bool], int],
                 log: Optional[ProofLogger] = None):
        super().__init__(order_layers(groups))
        self.new_var = new_var
        self.log = log
        self.new_clauses: list[list[int]] = []
        self.amo_id: dict[int, int] = {}
        self.ub_id: dict[int, int] = {}
        if log is not None:
            for k, g in enumerate(self.layers):
                if len(g) > 1:
                    self._certify_amo(k, g)

    # -- AMO and UB --------------------------------------------------------------
    def _certify_amo(self, k: int, g: list[tuple[int, int]]) -> None:
        log = self.log
        lits = [l for _, l in g]
        pair = {}
        for j in range(1, len(lits)):
            for i in range(j):
                pair[i, j] = log.rup_clause([-lits[i], -lits[j]])
        amo = pair[0, 1]
        for j in range(2, len(lits)):
            p = log.pol(amo, j - 1)
            for i in range(j):
                p.add(pair[i, j])
            p.div(j)
            amo = log.commit(p, pb.normalize([(1, l) for l in lits[: j + 1]], "<=", 1))
        self.amo_id[k] = amo
        mx = self.maxc[k]
        p = log.pol(amo, mx)
        for c, l in g:
            p.axiom(l, mx - c)
        self.ub_id[k] = log.commit(p, pb.normalize(g, "<=", mx))

    def _add_ubs(self, p, k0: int) -> None:
        for j in range(k0, self.m):
            g = self.layers[j]
            if len(g) > 1:
                p.add(self.ub_id[j])
            else:
                c, l = g[0]
                p.axiom(-l, c)

    # -- defining constraints ------------------------------------------------------
    def def_fwd(self, v: int, k: int, lo: int) -> pb.PBConstraint:
        terms = self.suffix_terms(k)
        return pb.normalize([(self.T[k] - lo, -v)] + [(-c, l) for c, l in terms], ">=", -lo)

    def def_bwd(self, v: int, k: int, hi: int) -> pb.PBConstraint:
        return pb.normalize([(hi + 1, v)] + self.suffix_terms(k), ">=", hi + 1)

    def defs_at(self, node: MddNode, k: int, lo: int, hi: int) -> tuple[int, int]:
        if k in node.defs:
            return node.defs[k]
        kn = node.layer
        if k > kn or hi != node.hi or lo != node.lo + sum(self.maxc[k:kn]):
            raise ProofError("inconsistent layer shift")
        log = self.log
        f0, b0 = node.defs[kn]
        p = log.pol(f0)
        self._add_ubs_range(p, k, kn)
        p.axiom(-node.var, sum(self.tsum[j] - self.maxc[j] for j in range(k, kn)))
        fwd = log.commit(p, self.def_fwd(node.var, k, lo))
        p = log.pol(b0)
        for j in range(k, kn):
            for c, l in self.layers[j]:
                p.axiom(l, c)
        bwd = log.commit(p, self.def_bwd(node.var, k, hi))
        node.defs[k] = (fwd, bwd)
        return fwd, bwd

    def _add_ubs_range(self, p, k0: int, k1: int) -> None:
        for j in range(k0, k1):
            g = self.layers[j]
            if len(g) > 1:
                p.add(self.ub_id[j])
            else:
                c, l = g[0]
                p.axiom(-l, c)

    # -- node creation ---------------------------------------------------------------
    def on_new_node(self, node: MddNode) -> None:
        node.var = self.new_var(False)
        node.var2 = self.new_var(True)
        if self.log is not None:
            self._certify(node)
        self._clauses(node)

    def _certify(self, n: MddNode) -> None:
        log = self.log
        k = n.layer
        terms = self.suffix_terms(k)
        r1, r2 = log.log_reification(terms, n.lo, n.var)
        r3, r4 = log.log_reification(terms, n.hi, n.var2)
        cases = [self._case_true(n, i, r2, r3) for i in range(len(self.layers[k]))]
        cases.append(self._case_false(n, r2, r3))
        p = log.pol(cases[0])
        for c in cases[1:]:
            p.add(c)
        p.div(len(cases))
        p.mul(n.hi + 1)
        p.add(r4)
        bwd = log.commit(p, self.def_bwd(n.var, k, n.hi))
        n.defs[k] = (r1, bwd)

    def _case_true(self, n: MddNode, idx: int, r2: int, r3: int) -> int:
        log = self.log
        k = n.layer
        g = self.layers[k]
        cm, bm = g[idx]
        v, v2 = n.var, n.var2
        child, clo, chi = n.children[idx]
        neg = log.begin_contradiction(pb.clause([-bm, -v2, v]))
        a_id = None
        if child is not TRUE:
            ub = log.commit(log.pol(neg).axiom(-v2).axiom(v))
            uv2 = log.commit(log.pol(neg).axiom(-bm).axiom(v))
            p = log.pol(uv2, self.T[k] - n.hi).add(r3).add(ub, cm)
            for i, (c, l) in enumerate(g):
                if i != idx:
                    p.axiom(l, c)
            if child is FALSE:
                if not p.value.is_contradiction():
                    raise ProofError("false-child case did not close")
                log.commit(p)
                return log.end_contradiction()
            _, cb = self.defs_at(child, k + 1, clo, chi)
            p.add(cb).div_to_clause()
            a_id = log.commit(p, pb.clause([child.var]))
        uvn = log.commit(log.pol(neg).axiom(-bm).axiom(-v2))
        p = log.pol(uvn, n.lo + 1).add(r2)
        if len(g) > 1:
            if child is TRUE:
                ub = log.commit(log.pol(neg).axiom(-v2).axiom(v))
            mx = self.maxc[k]
            p.add(self.amo_id[k], mx).add(ub, mx)
            for i, (c, l) in enumerate(g):
                if i != idx:
                    p.axiom(l, mx - c)
        p.axiom(-bm, cm)
        if child is TRUE:
            self._add_ubs(p, k + 1)
        else:
            cf, _ = self.defs_at(child, k + 1, clo, chi)
            p.add(cf).div_to_clause().add(a_id)
        if not p.value.is_contradiction():
            raise ProofError("case subproof did not reach a contradiction")
        log.commit(p)
        return log.end_contradiction()

    def _case_false(self, n: MddNode, r2: int, r3: int) -> int:
        log = self.log
        k = n.layer
        g = self.layers[k]
        v, v2 = n.var, n.var2
        child, elo, ehi = n.children[-1]
        if child is FALSE:
            raise ProofError("else-child cannot be the false leaf")
        c = pb.normalize([(1, l) for _, l in g] + [(1, -v2), (1, v)], ">=", 1)
        neg = log.begin_contradiction(c)
        a_id = None
        if child is not TRUE:
            p = log.pol(neg)
            for _, l in g:
                p.axiom(l)
            uv2 = log.commit(p.axiom(v))
            p = log.pol(uv2, self.T[k] - n.hi).add(r3)
            for cc, l in g:
                p.axiom(l, cc)
            _, cb = self.defs_at(child, k + 1, elo, ehi)
            p.add(cb).div_to_clause()
            a_id = log.commit(p, pb.clause([child.var]))
        p = log.pol(neg)
        for _, l in g:
            p.axiom(l)
        uvn = log.commit(p.axiom(-v2))
        allb = log.commit(log.pol(neg).axiom(-v2).axiom(v))
        mx = self.maxc[k]
        p = log.pol(uvn, n.lo + 1).add(r2).add(allb, mx)
        for cc, l in g:
            p.axiom(l, mx - cc)
        if child is TRUE:
            self._add_ubs(p, k + 1)
        else:
            cf, _ = self.defs_at(child, k + 1, elo, ehi)
            p.add(cf).div_to_clause().add(a_id)
        if not p.value.is_contradiction():
            raise ProofError("else case subproof did not reach a contradiction")
        log.commit(p)
        return log.end_contradiction()

    def _clauses(self, n: MddNode) -> None:
        k = n.layer
        g = self.layers[k]
        log = self.log
        v = n.var
        fwd = n.defs[k][0] if log is not None else None
        for idx, (cm, bm) in enumerate(g):
            child, clo, chi = n.children[idx]
            if child is TRUE:
                continue
            if child is FALSE:
                lits = [-bm, -v]
            else:
                lits = [-bm, child.var, -v]
            if log is not None:
                p = log.pol(fwd)
                if child is FALSE:
                    for j in range(k, self.m):
                        for i, (c, l) in enumerate(self.layers[j]):
                            if j > k or i != idx:
                                p.axiom(l, c)
                else:
                    p.add(self.defs_at(child, k + 1, clo, chi)[1])
                    for i, (c, l) in enumerate(g):
                        if i != idx:
                            p.axiom(l, c)
                log.commit(p.div_to_clause(), pb.clause(lits))
            self.new_clauses.append(lits)
        child, elo, ehi = n.children[-1]
        if child is not TRUE:
            lits = [child.var, -v]
            if log is not None:
                p = log.pol(fwd).add(self.defs_at(child, k + 1, elo, ehi)[1])
                for c, l in g:
                    p.axiom(l, c)
                log.commit(p.div_to_clause(), pb.clause(lits))
            self.new_clauses.append(lits)

    # -- top level -----------------------------------------------------------------------
    def encode(self, bound: int, sic_id: Optional[int] = None) -> tuple[list[list[int]], Entry]:
        """Extend the diagram for ``O <= bound``; returns new clauses and the root entry.

        The root unit clause is included unless the root is the true leaf.
        """
        self.new_clauses = []
        root = self.build(0, bound)
        node, lo, hi = root
        if node is FALSE:
            raise ValueError("bound below zero; the constraint is unsatisfiable")
        if isinstance(node, MddNode):
            if self.log is not None:
                _, bwd = self.defs_at(node, 0, lo, hi)
                p = self.log.pol(bwd).add(sic_id).div_to_clause()
                self.log.commit(p, pb.clause([node.var]))
            self.new_clauses.append([node.var])
        return self.new_clauses, root

    def aux_values(self, val: dict[int, bool]) -> dict[int, bool]:
        """Semantic values of the node variables under a total assignment."""
        out = {}
        for n in self.nodes:
            t = self.suffix_value(n.layer, val) <= n.lo
            out[n.var] = t
            out[n.var2] = t
        return out
