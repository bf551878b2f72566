"""Random instance generation and exhaustive oracles for small instances."""

from __future__ import annotations

import random
from typing import Optional

import numpy as np

from .pb import PBConstraint, lit_var
from .wcnf import MaxSatInstance


def random_instance(rng: random.Random, nvars: int = 10, nhard: int = 10, nsoft: int = 10,
                    maxw: int = 50, max_len: int = 3) -> MaxSatInstance:
    """Mixed unit / non-unit softs; clause lengths 1..max_len."""

    def rclause(lo: int) -> list[int]:
        k = rng.randint(lo, max(lo, min(max_len, nvars)))
        vs = rng.sample(range(1, nvars + 1), k)
        return [v if rng.random() < 0.5 else -v for v in vs]

    hard = [rclause(2) for _ in range(nhard)]
    soft = []
    for _ in range(nsoft):
        cl = rclause(1) if rng.random() < 0.5 else [rng.choice([1, -1]) * rng.randint(1, nvars)]
        soft.append((rng.randint(1, maxw), cl))
    return MaxSatInstance(hard, soft, nvars)


def all_assignments(n: int) -> np.ndarray:
    """Boolean matrix of shape (2**n, n + 1); column v is variable v, column 0 unused."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(bool)
    return np.concatenate([np.zeros((1 << n, 1), dtype=bool), bits], axis=1)


def _lit_cols(A: np.ndarray, lit: int) -> np.ndarray:
    col = A[:, lit_var(lit)]
    return col if lit > 0 else ~col


def clause_mask(A: np.ndarray, lits) -> np.ndarray:
    m = np.zeros(A.shape[0], dtype=bool)
    for l in lits:
        m |= _lit_cols(A, l)
    return m


def constraint_mask(A: np.ndarray, c: PBConstraint) -> np.ndarray:
    s = np.zeros(A.shape[0], dtype=object if c.degree > 2**62 else np.int64)
    for a, l in c.terms:
        s = s + a * _lit_cols(A, l)
    return s >= c.degree


def brute_force(inst: MaxSatInstance) -> Optional[int]:
    """Exhaustive MaxSAT optimum, or None if the hard clauses are unsatisfiable."""
    A = all_assignments(inst.nvars)
    ok = np.ones(A.shape[0], dtype=bool)
    for cl in inst.hard:
        ok &= clause_mask(A, cl)
    if not ok.any():
        return None
    cost = np.zeros(A.shape[0], dtype=np.int64)
    for w, cl in inst.soft:
        cost += w * ~clause_mask(A, cl)
    return int(cost[ok].min())


def brute_force_pbo(formula: list[PBConstraint], objective: list[tuple[int, int]], nvars: int) -> Optional[int]:
    A = all_assignments(nvars)
    ok = np.ones(A.shape[0], dtype=bool)
    for c in formula:
        ok &= constraint_mask(A, c)
    if not ok.any():
        return None
    cost = np.zeros(A.shape[0], dtype=np.int64)
    for a, l in objective:
        cost += a * _lit_cols(A, l)
    return int(cost[ok].min())
