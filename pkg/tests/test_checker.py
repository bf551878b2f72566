from __future__ import annotations

import random

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from certbnb import pb
from certbnb.checker import Checker, check_proof
from certbnb.gen import all_assignments, constraint_mask
from certbnb.prooflog import ProofLogger
from certbnb.wcnf import PboInstance

HEAD = "pseudo-Boolean proof version 2.0"


def inst_of(formula, objective=(), nvars=None):
    nv = nvars or max([abs(l) for c in formula for _, l in c.terms] + [abs(l) for _, l in objective] + [1])
    return PboInstance(list(formula), list(objective), [], nv, nv)


def run(inst, *body, conclude=False):
    return check_proof(inst, "\n".join([HEAD, f"f {len(inst.formula)}", *body]), require_conclusion=conclude)


def last_constraint(inst, *body):
    chk = Checker(inst)
    for line in [f"f {len(inst.formula)}", *body]:
        chk.step(line)
    return chk.store[chk.next_id - 1][0]


def test_weighted_core_sum():
    q1, q2 = pb.clause([-5, 1, 2]), pb.clause([-6, 3, 4])
    got = last_constraint(inst_of([q1, q2]), "pol 1 3 * 2 5 * +")
    assert got == pb.normalize([(3, -5), (3, 1), (3, 2), (5, -6), (5, 3), (5, 4)], ">=", 8)


def test_literal_axiom():
    assert last_constraint(inst_of([], nvars=1), "pol x1") == pb.PBConstraint(((1, 1),), 0)


def test_bad_multiplier_rejected_at_its_line():
    q1 = pb.clause([1, 2])
    res = run(inst_of([q1]), "pol 1 2 *", "pol 1 0 *")
    assert not res.accepted and res.line == 4


def test_dangling_id_rejected_at_its_line():
    res = run(inst_of([pb.clause([1, 2])]), "pol 1 1 +", "pol 1 7 +")
    assert not res.accepted and res.line == 4


def test_rup_examples():
    f = [pb.clause([-1, 2]), pb.clause([-1, -2])]
    assert run(inst_of(f), "rup 1 ~x1 >= 1 ;").accepted
    assert run(inst_of(f), "rup 1 ~x1 1 x2 >= 1 ;").accepted  # copy of stored clause
    res = run(inst_of(f, nvars=4), "rup 1 x3 1 x4 >= 1 ;")
    assert not res.accepted and res.line == 3


def test_rup_through_derived_pb_constraint():
    # the derived 4x1 + 2x2 + 2x3 >= 4 is not a clause; RUP must still see it once the original is gone
    inst = inst_of([pb.normalize([(2, 1), (1, 2), (1, 3)], ">=", 2), pb.clause([-2])])
    assert run(inst, "pol 1 2 *", "del id 1", "rup 1 x1 1 x3 >= 1 ;").accepted
    assert not run(inst, "pol 1 2 *", "del id 1", "rup 1 x2 >= 1 ;").accepted


def test_reification_pair_accepted():
    log = ProofLogger([])
    log.log_reification([(3, 1), (5, 2), (4, 3)], 6, 4)
    res = check_proof(inst_of([], nvars=4), log.text(), require_conclusion=False)
    assert res.accepted, res.reason


def test_reification_witness_on_objective_var_rejected():
    log = ProofLogger([])
    log.log_reification([(3, 1)], 0, 2)
    res = check_proof(inst_of([], [(1, 2)], nvars=2), log.text(), require_conclusion=False)
    assert not res.accepted


def test_tautology_without_subproof_rejected():
    assert not run(inst_of([], nvars=1), "red 1 x1 1 ~x1 >= 1 ;").accepted


def test_contradiction_subproof():
    # the negated tautology is 0 >= 1 itself
    body = ["red 1 x1 1 ~x1 >= 1 ; begin", "pol 1 2 *", "end"]
    assert run(inst_of([], nvars=1), *body).accepted
    res = run(inst_of([], nvars=1), "red 1 x1 >= 1 ; begin", "pol 1 x1 +", "end")
    assert not res.accepted


def test_solution_improvement():
    obj = [(3, 1), (5, 2), (5, 3), (6, 4)]
    inst = inst_of([pb.clause([1, 2])], obj)
    chk = Checker(inst)
    chk.step("f 1")
    chk.step("soli x1 x2 ~x3 ~x4")
    assert chk.store[chk.next_id - 1][0] == pb.normalize(obj, "<=", 7)
    # a non-improving solution already violates the stored improvement constraint
    res = run(inst, "soli x1 x2 ~x3 ~x4", "soli x1 x2 ~x3 ~x4")
    assert not res.accepted and res.line == 4


def test_solution_must_satisfy_formula():
    inst = inst_of([pb.clause([1, 2])], [(1, 1)])
    assert not run(inst, "soli ~x1 ~x2").accepted


def test_conclusions():
    inst = inst_of([pb.clause([1]), pb.clause([-1])])
    body = ["pol 1 2 +", "output NONE", "conclusion UNSAT", "end pseudo-Boolean proof"]
    assert run(inst, *body, conclude=True).accepted
    assert not run(inst_of([pb.clause([1])]), *body, conclude=True).accepted
    opt = inst_of([pb.clause([1, 2])], [(3, 1), (5, 2)])
    good = ["soli x1 ~x2", "rup >= 1 ;", "output NONE", "conclusion BOUNDS 3 3", "end pseudo-Boolean proof"]
    assert run(opt, *good, conclude=True).accepted
    wrong = list(good)
    wrong[3] = "conclusion BOUNDS 2 3"
    assert not run(opt, *wrong, conclude=True).accepted


def test_deletion():
    inst = inst_of([pb.clause([1]), pb.clause([-1, 2])])
    assert run(inst, "del id 1").accepted
    assert not run(inst, "del id 1", "rup 1 x2 >= 1 ;").accepted
    assert not run(inst, "del id 9").accepted


def test_content_after_end_rejected():
    inst = inst_of([pb.clause([1]), pb.clause([-1])])
    body = ["pol 1 2 +", "output NONE", "conclusion UNSAT", "end pseudo-Boolean proof", "rup >= 1 ;"]
    assert not run(inst, *body, conclude=True).accepted


N = 5
A = all_assignments(N)
lits = st.integers(1, N).flatmap(lambda v: st.sampled_from([v, -v]))
cons = st.builds(lambda t, d: pb.normalize(t, ">=", d),
                 st.lists(st.tuples(st.integers(1, 6), lits), min_size=1, max_size=4), st.integers(0, 8))


@settings(max_examples=60, deadline=None)
@given(st.lists(cons, min_size=1, max_size=4), st.integers(0, 2**32))
def test_random_rpn_result_is_entailed(formula, seed):
    rng = random.Random(seed)
    ok = np.ones(A.shape[0], dtype=bool)
    for c in formula:
        ok &= constraint_mask(A, c)
    toks = [str(rng.randint(1, len(formula)))]
    for _ in range(rng.randint(0, 4)):
        op = rng.randrange(4)
        if op == 0:
            toks += [str(rng.randint(1, len(formula))), "+"]
        elif op == 1:
            toks += [f"{'~' if rng.random() < 0.5 else ''}x{rng.randint(1, N)}", str(rng.randint(1, 3)), "*", "+"]
        elif op == 2:
            toks += [str(rng.randint(2, 4)), "d"]
        else:
            toks += ["s"]
    got = last_constraint(inst_of(formula, nvars=N), "pol " + " ".join(toks))
    assert not (ok & ~constraint_mask(A, got)).any()


def test_checker_is_deterministic():
    q1, q2 = pb.clause([-5, 1, 2]), pb.clause([-6, 3, 4])
    text = "\n".join([HEAD, "f 2", "pol 1 3 * 2 5 * +", "rup 1 x1 1 x2 1 ~x5 >= 1 ;"])
    a = check_proof(inst_of([q1, q2]), text, require_conclusion=False)
    b = check_proof(inst_of([q1, q2]), text, require_conclusion=False)
    assert (a.accepted, a.line, a.census) == (b.accepted, b.line, b.census)
