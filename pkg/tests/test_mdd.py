from __future__ import annotations

import random

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import (amo_clauses, amo_mask, horn_extendable, node_violations, objective_values,
                     random_objective)

from certbnb import pb
from certbnb.checker import check_proof
from certbnb.mdd import FALSE, TRUE, Mdd, MddEncoder, MddNode, greedy_groups, order_layers
from certbnb.prooflog import ProofLogger
from certbnb.wcnf import PboInstance


def test_single_variable_root():
    mdd = Mdd([[(5, 1)]])
    node, lo, hi = mdd.build(0, 4)
    assert isinstance(node, MddNode) and (lo, hi) == (0, 4)
    assert node.children[0][0] is FALSE and node.children[1][0] is TRUE


def test_equivalent_degrees_share_a_node():
    mdd = Mdd([[(12, 1)], [(5, 2)], [(4, 3)]])
    entries = [mdd.build(1, d) for d in (5, 6, 7, 8)]
    assert len({id(e[0]) for e in entries}) == 1
    assert entries[0][1:] == (5, 8)
    assert mdd.build(0, 8)[1:] == (5, 8)
    assert node_violations(mdd) == []


def test_trivial_bounds_are_leaves():
    mdd = Mdd([[(3, 1)], [(2, 2)]])
    assert mdd.build(0, -1)[0] is FALSE
    assert mdd.build(0, 5)[0] is TRUE
    assert mdd.nodes == []


def test_layer_order():
    groups = [[(2, 3)], [(5, 1), (7, 2)], [(7, 4)]]
    assert order_layers(groups) == [[(7, 2), (5, 1)], [(7, 4)], [(2, 3)]]


def test_grouping_from_exclusions():
    obj = [(5, 1), (3, 2), (4, 3)]
    assert greedy_groups(obj, {}) == [[(5, 1)], [(4, 3)], [(3, 2)]]
    excl = {1: {2}, 2: {1}}
    assert greedy_groups(obj, excl) == [[(5, 1), (3, 2)], [(4, 3)]]


def certified(groups, bound, n):
    """Encode with logging against F = AMO clauses + (O <= bound); returns text and checker verdict."""
    obj = [t for g in groups for t in g]
    formula = [pb.clause(c) for c in amo_clauses(groups)] + [pb.normalize(obj, "<=", bound)]
    log = ProofLogger(formula)
    log.sic_id = len(formula)
    counter = [n]

    def new_var(hidden):
        counter[0] += 1
        return counter[0]

    enc = MddEncoder(groups, new_var, log)
    clauses, root = enc.encode(bound, log.sic_id)
    inst = PboInstance(formula, obj, [], n, n)
    return enc, clauses, log, check_proof(inst, log.text(), require_conclusion=False)


def test_upper_bound_two_literals():
    enc, _, log, res = certified([[(5, 1), (3, 2)]], 4, 2)
    assert res.accepted, res.reason
    assert log.get(enc.ub_id[0]) == pb.normalize([(5, 1), (3, 2)], "<=", 5)


def test_upper_bound_equal_costs():
    enc, _, log, res = certified([[(4, 1), (4, 2), (4, 3)]], 5, 3)
    assert res.accepted, res.reason
    assert log.get(enc.ub_id[0]) == pb.normalize([(4, 1), (4, 2), (4, 3)], "<=", 4)
    assert " x1 0 * " not in log.text()


def test_bdd_from_small_coefficients_certifies():
    enc, clauses, log, res = certified([[(12, 1)], [(5, 2)], [(4, 3)]], 8, 3)
    assert res.accepted, res.reason
    assert node_violations(enc) == []


def test_group_of_two_uses_three_cases():
    enc, clauses, log, res = certified([[(5, 1), (3, 2)], [(4, 3)]], 6, 3)
    assert res.accepted, res.reason
    root = enc.nodes[-1]  # nodes are created bottom-up
    assert root.layer == 0 and len(root.children) == 3
    # one clause per non-true child of each internal node, plus the root unit
    expected = sum(1 for n in enc.nodes for ch in n.children if ch[0] is not TRUE) + 1
    assert len(clauses) == expected


def test_leaves_get_no_variables():
    enc, clauses, log, res = certified([[(3, 1)], [(2, 2)]], 2, 2)
    allvars = {abs(l) for c in clauses for l in c}
    assert allvars - {1, 2} == {n.var for n in enc.nodes}


def test_reencoding_tightens_root():
    _, groups = random_objective(random.Random(3), 7)
    obj = [t for g in groups for t in g]
    counter = [7]
    enc = MddEncoder(groups, lambda h: counter.__setitem__(0, counter[0] + 1) or counter[0])
    total = sum(c for c, _ in obj)
    clauses = []
    for bound in (total - 1, total // 2, total // 4):
        new, _ = enc.encode(bound)
        clauses += new
        aux = {n.var for n in enc.nodes}
        A, ok = horn_extendable(clauses, 7, aux)
        val = objective_values(A, obj)
        amo = amo_mask(A, groups)
        assert (ok[amo] == (val[amo] <= bound)).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_node_semantics(seed):
    rng = random.Random(seed)
    obj, groups = random_objective(rng, rng.randint(1, 12))
    mdd = Mdd(order_layers(groups))
    total = sum(c for c, _ in obj)
    for _ in range(3):
        mdd.build(0, rng.randint(0, total))
    assert node_violations(mdd) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.booleans())
def test_encoding_matches_bound(seed, planted):
    rng = random.Random(seed)
    n = rng.randint(1, 9)
    obj, groups = random_objective(rng, n, planted)
    counter = [n]

    def new_var(hidden):
        counter[0] += 1
        return counter[0]

    enc = MddEncoder(groups, new_var)
    bound = rng.randint(0, sum(c for c, _ in obj))
    clauses, _ = enc.encode(bound)
    aux = {v for nd in enc.nodes for v in (nd.var, nd.var2)}
    A, ok = horn_extendable(clauses, n, aux)
    val = objective_values(A, obj)
    amo = amo_mask(A, groups)
    assert (ok[amo] == (val[amo] <= bound)).all()
    # the semantic node values are one witness for the satisfiable side
    for row in np.flatnonzero(amo & (val <= bound))[:20]:
        asg = {v: bool(A[row, v]) for v in range(1, n + 1)}
        asg.update(enc.aux_values(asg))
        assert all(any(asg.get(abs(l), False) == (l > 0) for l in c) for c in clauses)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32))
def test_certified_encoding_checks(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    obj, groups = random_objective(rng, n)
    bound = rng.randint(0, sum(c for c, _ in obj) - 1)
    enc, clauses, log, res = certified(groups, bound, n)
    assert res.accepted, res.reason
    assert defined_before_use(log.text(), {v for nd in enc.nodes for v in (nd.var, nd.var2)}) == []


def defined_before_use(text: str, aux: set[int]) -> list[str]:
    """Both reification steps of every auxiliary must precede any other line using it."""
    defs = {v: 0 for v in aux}
    bad = []
    for line in text.splitlines():
        toks = line.split()
        if len(toks) >= 4 and toks[0] == "red" and toks[-2] == "->":
            v = int(toks[-3][1:])
            if v in defs:
                defs[v] += 1
            continue
        for t in toks[1:]:
            if t.lstrip("~").startswith("x"):
                v = int(t.lstrip("~x"))
                if v in defs and defs[v] < 2:
                    bad.append(f"x{v} used before its definitions: {line}")
    return bad
