from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certbnb import INDETERMINATE, OPTIMUM, UNSAT, SolverConfig, pb, solve
from certbnb.cdcl import Solver, luby
from certbnb.checker import check_proof
from certbnb.gen import all_assignments, brute_force, clause_mask, random_instance
from certbnb.prooflog import ProofLogger
from certbnb.wcnf import MaxSatInstance, PboInstance, to_pbo


def clause_inst(clauses, nvars, objective=()):
    return PboInstance([pb.clause(c) for c in clauses], list(objective), [], nvars, nvars)


def test_luby():
    assert [luby(i) for i in range(15)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


def test_two_literal_optimum():
    inst = clause_inst([[1, 2]], 2, [(3, 1), (5, 2)])
    res = Solver(inst).solve()
    assert res.status == OPTIMUM and res.value == 3


def test_learn_unit_and_backjump():
    inst = clause_inst([[-1, 2], [-1, -2]], 2)
    s = Solver(inst)
    s.new_level()
    s.enqueue(1, -1)
    ci = s.propagate()
    assert ci is not None
    s._learn(list(s.clauses[ci]))
    assert s.clauses[-1] == [-1]
    assert s.decision_level() == 0 and s.value(-1) > 0


def test_diamond_learned_clause_is_rup():
    clauses = [[-1, 2], [-1, 3], [-2, 4], [-3, 4], [-4, 5], [-4, -5]]
    inst = clause_inst(clauses, 5)
    log = ProofLogger(inst.formula)
    s = Solver(inst, log)
    s.new_level()
    s.enqueue(1, -1)
    ci = s.propagate()
    s._learn(list(s.clauses[ci]))
    assert s.clauses[-1] == [-4]
    assert check_proof(inst, log.text(), require_conclusion=False).accepted


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_first_conflict_clause_is_entailed(seed):
    rng = random.Random(seed)
    n = 12
    clauses = [[v if rng.random() < 0.5 else -v for v in rng.sample(range(1, n + 1), 3)] for _ in range(50)]
    inst = clause_inst(clauses, n)
    log = ProofLogger(inst.formula)
    s = Solver(inst, log)
    if s.root_conflict or s.propagate() is not None:
        return
    while True:
        free = [v for v in range(1, n + 1) if s.val[v] == 0]
        if not free:
            return
        v = rng.choice(free)
        s.new_level()
        s.enqueue(v if rng.random() < 0.5 else -v, -1)
        ci = s.propagate()
        if ci is not None:
            break
    learned, _ = s.analyze(list(s.clauses[ci]))
    A = all_assignments(n)
    ok = np.ones(A.shape[0], dtype=bool)
    for c in clauses:
        ok &= clause_mask(A, c)
    assert not (ok & ~clause_mask(A, learned)).any()
    log.rup_clause(learned)
    assert check_proof(inst, log.text(), require_conclusion=False).accepted


def test_unsat_hard_part():
    inst = MaxSatInstance([[1], [-1, 2], [-2]], [(3, [1])], 2)
    res, proof = solve(inst, proof=True)
    assert res.status == UNSAT
    chk = check_proof(to_pbo(inst), proof)
    assert chk.accepted and chk.conclusion == "UNSAT"


def test_empty_instance():
    res, proof = solve(MaxSatInstance([], [], 0), proof=True)
    assert res.status == OPTIMUM and res.value == 0
    assert check_proof(to_pbo(MaxSatInstance([], [], 0)), proof).accepted


def test_duplicate_unit_softs_merge():
    inst = MaxSatInstance([[1, 2]], [(3, [-1]), (4, [-1]), (2, [1])], 2)
    res, proof = solve(inst, proof=True)
    assert res.value == brute_force(inst)
    assert check_proof(to_pbo(inst), proof).accepted


def test_limits_give_indeterminate_with_valid_prefix():
    rng = random.Random(11)
    inst = random_instance(rng, 16, 30, 40, 50, 3)
    res, proof = solve(inst, SolverConfig(conflict_limit=1), proof=True)
    assert res.status == INDETERMINATE
    assert res.incumbents  # a solution was logged before the limit hit
    assert check_proof(to_pbo(inst), proof, require_conclusion=False).accepted
    res, _ = solve(inst, SolverConfig(time_limit=0.0))
    assert res.status in (INDETERMINATE, OPTIMUM)


CONFIGS = [
    SolverConfig(),
    SolverConfig(mdd_threshold=0),
    SolverConfig(amo_detect=False),
    SolverConfig(lookahead_period=4),
    SolverConfig(restarts=False, reduce_db=False),
    SolverConfig(log_deletions=True, seed=3),
]


@pytest.mark.parametrize("cfg", CONFIGS, ids=["default", "no-mdd", "no-amo", "period4", "plain", "deletions"])
def test_configurations_agree_with_oracle(cfg):
    rng = random.Random(7)
    for _ in range(12):
        n = rng.randint(2, 11)
        inst = random_instance(rng, n, rng.randint(0, 3 * n), rng.randint(1, 15), 50, 3)
        res, proof = solve(inst, cfg, proof=True)
        opt = brute_force(inst)
        if opt is None:
            assert res.status == UNSAT
        else:
            assert res.status == OPTIMUM and res.value == opt
            assert inst.cost(res.model) == opt
        chk = check_proof(to_pbo(inst), proof)
        assert chk.accepted, chk.reason
        assert res.incumbents == sorted(res.incumbents, reverse=True)
        assert len(set(res.incumbents)) == len(res.incumbents)


def test_seed_determinism():
    inst = random_instance(random.Random(1), 10, 12, 12, 50, 3)
    a, pa = solve(inst, SolverConfig(seed=5), proof=True)
    b, pb_ = solve(inst, SolverConfig(seed=5), proof=True)
    assert (a.value, a.incumbents, pa) == (b.value, b.incumbents, pb_)
