"""Pseudo-Boolean constraints, cutting-planes arithmetic and slack propagation.

Literals are signed integers in the DIMACS convention: ``k`` is the variable
``x_k`` and ``-k`` its negation.  Every constraint is kept in normalized form
``sum(a_i * l_i) >= A`` with positive coefficients, one term per variable,
terms sorted by variable index and a non-negative degree.  Python integers
are unbounded, so no coefficient arithmetic can overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

Lit = int


def lit_var(lit: Lit) -> int:
    return lit if lit > 0 else -lit


def lit_text(lit: Lit) -> str:
    return f"x{lit}" if lit > 0 else f"~x{-lit}"


def parse_lit(tok: str) -> Lit:
    neg = tok.startswith("~")
    body = tok[1:] if neg else tok
    if not body.startswith("x") or not body[1:].isdigit() or int(body[1:]) == 0:
        raise ValueError(f"bad literal {tok!r}")
    v = int(body[1:])
    return -v if neg else v


@dataclass(frozen=True)
class PBConstraint:
    """Normalized constraint ``sum(coef * lit) >= degree``."""

    terms: tuple[tuple[int, Lit], ...]
    degree: int

    def __str__(self) -> str:
        return to_text(self)

    @property
    def coef_sum(self) -> int:
        return sum(a for a, _ in self.terms)

    def is_contradiction(self) -> bool:
        """True when no assignment can satisfy the constraint."""
        return self.coef_sum < self.degree

    def is_tautology(self) -> bool:
        return self.degree <= 0

    def is_clause(self) -> bool:
        return self.degree == 1 and all(a == 1 for a, _ in self.terms)

    def lits(self) -> list[Lit]:
        return [l for _, l in self.terms]

    def variables(self) -> set[int]:
        return {lit_var(l) for _, l in self.terms}

    def coef_of(self, lit: Lit) -> int:
        for a, l in self.terms:
            if l == lit:
                return a
        return 0

    def slack(self, assignment: Mapping[int, bool]) -> int:
        """Sum of coefficients of non-falsified literals minus the degree."""
        total = 0
        for a, l in self.terms:
            val = assignment.get(lit_var(l))
            if val is None or val == (l > 0):
                total += a
        return total - self.degree

    def satisfied_by(self, assignment: Mapping[int, bool]) -> bool:
        """Evaluate under an assignment; unassigned variables count as 0."""
        total = 0
        for a, l in self.terms:
            val = assignment.get(lit_var(l), False)
            if val == (l > 0):
                total += a
        return total >= self.degree

    def restrict(self, assignment: Mapping[int, bool]) -> "PBConstraint":
        """The constraint with assigned variables substituted (C restricted to alpha)."""
        keep = []
        degree = self.degree
        for a, l in self.terms:
            val = assignment.get(lit_var(l))
            if val is None:
                keep.append((a, l))
            elif val == (l > 0):
                degree -= a
        return PBConstraint(tuple(keep), max(degree, 0))


TRIVIAL = PBConstraint((), 0)
CONTRADICTION = PBConstraint((), 1)


def normalize(terms: Iterable[tuple[int, Lit]], cmp: str = ">=", rhs: int = 0) -> PBConstraint:
    """Bring an integer linear inequality over literals into normalized form.

    ``cmp`` is ``">="`` or ``"<="``.  Duplicate variables are merged,
    negative coefficients are moved to the complementary literal and
    tautologies get degree 0.
    """
    if cmp not in (">=", "<="):
        raise ValueError(f"unsupported comparison {cmp!r}")
    sign = 1 if cmp == ">=" else -1
    pos: dict[int, int] = {}
    degree = sign * rhs
    for a, l in terms:
        a *= sign
        if a == 0:
            continue
        v = lit_var(l)
        if l > 0:
            pos[v] = pos.get(v, 0) + a
        else:
            # a * ~x == a - a * x
            pos[v] = pos.get(v, 0) - a
            degree -= a
    out = []
    for v in sorted(pos):
        a = pos[v]
        if a > 0:
            out.append((a, v))
        elif a < 0:
            out.append((-a, -v))
            degree -= a
    return PBConstraint(tuple(out), max(degree, 0))


def clause(lits: Iterable[Lit]) -> PBConstraint:
    return normalize(((1, l) for l in set(lits)), ">=", 1)


def negate_constraint(c: PBConstraint) -> PBConstraint:
    """The constraint satisfied exactly by the assignments violating ``c``."""
    return normalize(c.terms, "<=", c.degree - 1)


def cp_add(a: PBConstraint, b: PBConstraint) -> PBConstraint:
    return normalize(list(a.terms) + list(b.terms), ">=", a.degree + b.degree)


def cp_multiply(c: PBConstraint, k: int) -> PBConstraint:
    if k < 1:
        raise ValueError("multiplier must be a positive integer")
    return PBConstraint(tuple((a * k, l) for a, l in c.terms), c.degree * k)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def cp_divide(c: PBConstraint, k: int) -> PBConstraint:
    if k < 1:
        raise ValueError("divisor must be a positive integer")
    if not c.terms and c.degree > 0:
        return CONTRADICTION
    return PBConstraint(tuple((_ceil_div(a, k), l) for a, l in c.terms), _ceil_div(c.degree, k))


def cp_saturate(c: PBConstraint) -> PBConstraint:
    d = c.degree
    return PBConstraint(tuple((min(a, d), l) for a, l in c.terms if min(a, d) > 0), d)


def cp_literal_axiom(lit: Lit) -> PBConstraint:
    return PBConstraint(((1, lit),), 0)


class LinearForm:
    """Running sum of normalized constraints, normalized only on demand.

    Adding normalized constraints one at a time and normalizing after each
    step clamps a negative degree to 0; the form reproduces that exactly, so
    ``value()`` equals the stepwise result of ``cp_add``.
    """

    __slots__ = ("coef", "deg", "neg")

    def __init__(self, c: Optional[PBConstraint] = None, mult: int = 1):
        self.coef: dict[int, int] = {}
        self.deg = 0
        self.neg = 0
        if c is not None:
            self.add(c, mult)

    def add(self, c: PBConstraint, mult: int = 1) -> "LinearForm":
        coef = self.coef
        deg = c.degree * mult
        neg = self.neg
        for a, l in c.terms:
            a *= mult
            if l > 0:
                old = coef.get(l, 0)
                new = old + a
                coef[l] = new
            else:
                old = coef.get(-l, 0)
                new = old - a
                coef[-l] = new
                deg -= a
            neg += (-new if new < 0 else 0) - (-old if old < 0 else 0)
        self.neg = neg
        self.deg += deg
        # normalized degree is deg + neg
        if self.deg + neg < 0:
            self.deg = -neg
        return self

    def value(self) -> PBConstraint:
        return normalize(((a, v) for v, a in self.coef.items()), ">=", self.deg)


def implies(x: PBConstraint, y: PBConstraint) -> bool:
    """Sufficient syntactic test that ``x`` implies ``y`` (weakening check)."""
    ycoef = {l: a for a, l in y.terms}
    loss = 0
    for a, l in x.terms:
        b = ycoef.get(l, 0)
        if a > b:
            loss += a - b
    return x.degree - loss >= y.degree


# -- textual form shared with the proof format ------------------------------

def to_text(c: PBConstraint) -> str:
    parts = [f"{a:+d} {lit_text(l)}" for a, l in c.terms]
    parts.append(f">= {c.degree} ;")
    return " ".join(parts)


def parse_constraint_tokens(tokens: Sequence[str]) -> tuple[PBConstraint, int]:
    """Parse ``<coef> <lit> ... >= <deg> ;`` from a token list.

    Returns the normalized constraint and the number of tokens consumed
    (including the terminating ``;``).
    """
    terms = []
    i = 0
    n = len(tokens)
    while i < n and tokens[i] != ">=":
        if i + 1 >= n:
            raise ValueError("dangling coefficient")
        try:
            coef = int(tokens[i])
        except ValueError:
            raise ValueError(f"bad coefficient {tokens[i]!r}") from None
        terms.append((coef, parse_lit(tokens[i + 1])))
        i += 2
    if i + 2 >= n or tokens[i + 2] != ";":
        raise ValueError("constraint must end with '>= <degree> ;'")
    try:
        deg = int(tokens[i + 1])
    except ValueError:
        raise ValueError(f"bad degree {tokens[i + 1]!r}") from None
    return normalize(terms, ">=", deg), i + 3


def parse_constraint(text: str) -> PBConstraint:
    tokens = text.split()
    c, used = parse_constraint_tokens(tokens)
    if used != len(tokens):
        raise ValueError("trailing tokens after constraint")
    return c


# -- slack-based propagation --------------------------------------------------

class Propagator:
    """Unit propagation over normalized PB constraints using slack counters.

    For each constraint the engine keeps ``slack = sum of coefficients of
    literals not falsified - degree``.  A negative slack is a conflict and
    every unassigned literal whose coefficient exceeds the slack is implied.
    Clauses are the special case with slack 0 forcing the last literal.
    """

    def __init__(self) -> None:
        self.constraints: list[Optional[PBConstraint]] = []
        self.slack: list[int] = []
        self.maxcoef: list[int] = []
        self.by_coef: list[tuple[tuple[int, Lit], ...]] = []
        self.occ: dict[Lit, list[tuple[int, int]]] = {}
        self.val: dict[int, bool] = {}
        self.pos: dict[int, int] = {}
        self.reason: dict[int, Optional[int]] = {}
        self.trail: list[Lit] = []
        self.lim: list[int] = []
        self.qhead = 0
        self.root_conflict = False

    @property
    def level(self) -> int:
        return len(self.lim)

    def value(self, lit: Lit) -> Optional[bool]:
        v = self.val.get(lit_var(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def assign(self, lit: Lit, reason: Optional[int] = None) -> None:
        v = lit_var(lit)
        self.val[v] = lit > 0
        self.pos[v] = len(self.trail)
        self.reason[v] = reason
        self.trail.append(lit)

    def _processed_false(self, lit: Lit) -> bool:
        v = lit_var(lit)
        val = self.val.get(v)
        return val is not None and val != (lit > 0) and self.pos[v] < self.qhead

    def _scan(self, cid: int) -> None:
        s = self.slack[cid]
        val = self.val
        for a, l in self.by_coef[cid]:
            if a <= s:
                break
            if (l if l > 0 else -l) not in val:
                self.assign(l, cid)

    def add(self, c: PBConstraint) -> tuple[int, bool]:
        """Register a constraint; returns ``(cid, conflict_now)``."""
        cid = len(self.constraints)
        self.constraints.append(c)
        s = -c.degree
        mc = 0
        for a, l in c.terms:
            self.occ.setdefault(l, []).append((cid, a))
            if not self._processed_false(l):
                s += a
            mc = max(mc, a)
        self.slack.append(s)
        self.maxcoef.append(mc)
        self.by_coef.append(tuple(sorted(c.terms, key=lambda t: -t[0])))
        if s < 0:
            if self.level == 0:
                self.root_conflict = True
            return cid, True
        if mc > s:
            self._scan(cid)
        return cid, False

    def remove(self, cid: int) -> None:
        c = self.constraints[cid]
        if c is None:
            return
        for a, l in c.terms:
            lst = self.occ[l]
            if lst and lst[-1][0] == cid:
                lst.pop()
            else:
                lst.remove((cid, a))
        self.constraints[cid] = None
        if cid == len(self.constraints) - 1:
            self.constraints.pop()
            self.slack.pop()
            self.maxcoef.pop()
            self.by_coef.pop()

    def propagate(self) -> Optional[int]:
        """Propagate to fixpoint; returns a conflicting constraint id or None."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            conflict = None
            check = []
            for cid, a in self.occ.get(-lit, ()):
                s = self.slack[cid] - a
                self.slack[cid] = s
                if s < 0:
                    if conflict is None:
                        conflict = cid
                elif self.maxcoef[cid] > s:
                    check.append(cid)
            if conflict is not None:
                if self.level == 0:
                    self.root_conflict = True
                return conflict
            for cid in check:
                self._scan(cid)
        return None

    def push(self) -> None:
        self.lim.append(len(self.trail))

    def rebuild(self) -> None:
        """Recompute all root-level state from the live constraints."""
        if self.lim:
            raise RuntimeError("rebuild only at level 0")
        self.val.clear()
        self.pos.clear()
        self.reason.clear()
        self.trail.clear()
        self.qhead = 0
        self.root_conflict = False
        for cid, c in enumerate(self.constraints):
            if c is None:
                continue
            self.slack[cid] = c.coef_sum - c.degree
            if self.slack[cid] < 0:
                self.root_conflict = True
        if not self.root_conflict:
            for cid, c in enumerate(self.constraints):
                if c is not None and self.maxcoef[cid] > self.slack[cid]:
                    self._scan(cid)

    def pop(self) -> None:
        start = self.lim.pop()
        for i in range(len(self.trail) - 1, start - 1, -1):
            lit = self.trail[i]
            if i < self.qhead:
                for cid, a in self.occ.get(-lit, ()):
                    self.slack[cid] += a
            v = lit_var(lit)
            del self.val[v]
            del self.pos[v]
            del self.reason[v]
        del self.trail[start:]
        self.qhead = min(self.qhead, start)


def propagate(db: Sequence[PBConstraint], assignment: Iterable[Lit]):
    """Unit-propagate ``assignment`` over ``db`` to fixpoint.

    Returns ``(trail, reasons)`` where ``reasons[lit]`` is ``None`` for the
    given literals and the index into ``db`` for implied ones, or
    ``("conflict", index)`` when some constraint is violated.
    """
    p = Propagator()
    p.push()
    for lit in assignment:
        val = p.value(lit)
        if val is False:
            return ("conflict", None)
        if val is None:
            p.assign(lit)
    for c in db:
        cid, conflict = p.add(c)
        if conflict:
            return ("conflict", cid)
    conflict = p.propagate()
    if conflict is not None:
        return ("conflict", conflict)
    return list(p.trail), {l: p.reason[lit_var(l)] for l in p.trail}
