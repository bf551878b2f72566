from __future__ import annotations

import random

from certbnb import SolverConfig, pb, solve
from certbnb.checker import check_proof
from certbnb.fuzz import SemanticOracle, cosmetic_mutations, fuzz_proof, token_mutations
from certbnb.gen import random_instance
from certbnb.wcnf import PboInstance, to_pbo


def test_token_mutations_change_one_token():
    line = "rup 1 x1 2 ~x3 >= 2 ;"
    muts = token_mutations(line, random.Random(0), 50)
    assert muts and len(set(muts)) == len(muts)
    for m in muts:
        a, b = line.split(), m.split()
        assert len(a) == len(b) and sum(x != y for x, y in zip(a, b)) == 1


def test_token_mutations_skip_comments_and_ends():
    rng = random.Random(0)
    assert token_mutations("* note 3", rng, 5) == []
    assert token_mutations("end", rng, 5) == []
    assert token_mutations("pseudo-Boolean proof version 2.0", rng, 5) == []


def test_witness_flip():
    muts = token_mutations("red 1 ~x3 1 x1 >= 1 ; x3 -> 0", random.Random(1), 50)
    assert "red 1 ~x3 1 x1 >= 1 ; x3 -> 1" in muts


def test_oracle_classification():
    inst = PboInstance([pb.clause([1]), pb.clause([-1, 2])], [(3, 2)], [], 3, 3)
    o = SemanticOracle(inst, 3)
    o.apply("f 2")
    assert o.judge("rup 1 x2 >= 1 ;") == "benign"
    assert o.judge("rup 1 ~x2 >= 1 ;") == "unsound"
    assert o.judge("pol 1 2 +") == "benign"
    assert o.judge("pol 1 7 +") == "invalid"
    assert o.judge("red 1 x3 >= 1 ; x3 -> 1") == "benign"
    assert o.judge("red 1 x3 >= 1 ; x3 -> 0") == "unsound"
    assert o.judge("red 1 x2 >= 1 ; x2 -> 1") == "invalid"  # objective variable
    assert o.judge("soli x1 x2 ~x3") == "benign"
    assert o.judge("soli ~x1 x2 ~x3") == "unsound"
    assert o.judge("conclusion BOUNDS 3 3") == "benign"
    assert o.judge("conclusion BOUNDS 4 5") == "unsound"
    assert o.judge("del id 9") == "invalid"


def test_oracle_tracks_incumbent():
    inst = PboInstance([], [(3, 1), (2, 2)], [], 2, 2)
    o = SemanticOracle(inst, 2)
    o.apply("f 0")
    o.apply("soli x1 ~x2")
    assert o.judge("soli x1 ~x2") == "unsound"
    assert o.judge("soli ~x1 x2") == "benign"


def test_cosmetic_mutations_keep_proof_valid():
    inst = random_instance(random.Random(3), 5, 6, 4, 20, 3)
    _, text = solve(inst, proof=True)
    pbo = to_pbo(inst)
    lines = text.splitlines()
    for new in cosmetic_mutations(lines, random.Random(4), 40):
        assert check_proof(pbo, "\n".join(new)).accepted


def test_small_fuzz_rejects_every_semantic_mutation():
    rng = random.Random(8)
    total = rejected = 0
    for i in range(10):
        inst = random_instance(rng, rng.randint(4, 6), rng.randint(3, 10), rng.randint(2, 5), 20, 3)
        _, text = solve(inst, SolverConfig(mdd_threshold=200 if i % 2 else 0), proof=True)
        rep = fuzz_proof(to_pbo(inst), text, random.Random(i), max_mutations=40, cosmetic=5)
        assert rep.failures == []
        assert rep.cosmetic_accepted == rep.cosmetic_total
        total += rep.semantic
        rejected += rep.semantic_rejected
    assert total > 0 and rejected == total
