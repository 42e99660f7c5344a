"""Boolean relations, bounded-occurrence formulas, and property checkers.

A relation is a nonempty set of bit vectors of one arity.  Formulas are
conjunctions of clauses, each applying the relation to a vector of
arguments that are variables or the constants 0/1.  The tractability
classifiers (Horn, dual-Horn, bijunctive, affine, and the two-step
Delta-matroid axiom) are exhaustive closure checks; relations here are
tiny, so clarity wins over cleverness.  Every negative answer carries a
concrete witness that can be rechecked independently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .errors import BudgetExceededError, FormatError, NormsurfError


@dataclass(frozen=True)
class Relation:
    arity: int
    tuples: frozenset

    def __post_init__(self):
        if not self.tuples:
            raise NormsurfError("a relation must be nonempty")
        for t in self.tuples:
            if len(t) != self.arity or any(b not in (0, 1) for b in t):
                raise NormsurfError(f"tuple {t} does not fit arity {self.arity}")

    @classmethod
    def of(cls, arity, tuples) -> "Relation":
        return cls(arity, frozenset(tuple(t) for t in tuples))

    def __contains__(self, t):
        return tuple(t) in self.tuples

    def sorted_tuples(self):
        return sorted(self.tuples)

    def __repr__(self):
        return f"Relation(arity={self.arity}, size={len(self.tuples)})"


#: The 6-ary clause relation realized by the clause gadget: exactly the
#: crossing patterns that glue its eighteen disks into branch-free curves.
RELATION_R = Relation.of(6, [
    (0, 0, 0, 0, 0, 0), (0, 0, 0, 1, 0, 1), (0, 0, 1, 0, 1, 0),
    (0, 1, 0, 0, 0, 1), (0, 1, 0, 1, 0, 0), (0, 1, 1, 0, 1, 1),
    (1, 0, 0, 0, 1, 0), (1, 0, 1, 0, 0, 0), (1, 0, 1, 1, 0, 1),
    (1, 1, 0, 1, 1, 0), (1, 1, 1, 1, 1, 1),
])

FULL_CUBE_2 = Relation.of(2, [(0, 0), (0, 1), (1, 0), (1, 1)])
EQUALITY_2 = Relation.of(2, [(0, 0), (1, 1)])


def hamming(x, y) -> int:
    return sum(a != b for a, b in zip(x, y))


def is_step(x, xp, y) -> bool:
    """Is x' a step from x to y: one flip, on a geodesic toward y."""
    return hamming(x, xp) == 1 and hamming(x, xp) + hamming(xp, y) == hamming(x, y)


@dataclass(frozen=True)
class StepWitness:
    x: tuple
    y: tuple
    xp: tuple

    def check(self, R: Relation) -> bool:
        """Recheck that this triple violates the two-step axiom for R."""
        if self.x not in R or self.y not in R:
            return False
        if not is_step(self.x, self.xp, self.y) or self.xp in R:
            return False
        return not any(
            is_step(self.xp, xpp, self.y) for xpp in R.tuples
        )


def _bitop(op, *vecs):
    return tuple(op(*bits) for bits in zip(*vecs))


@dataclass(frozen=True)
class RelationProperties:
    horn: bool
    dual_horn: bool
    bijunctive: bool
    affine: bool
    delta_matroid: bool
    witnesses: dict = field(default_factory=dict, compare=False)

    @property
    def schaefer(self) -> bool:
        return self.horn or self.dual_horn or self.bijunctive or self.affine

    def as_dict(self):
        return {
            "horn": self.horn,
            "dual_horn": self.dual_horn,
            "bijunctive": self.bijunctive,
            "affine": self.affine,
            "schaefer": self.schaefer,
            "delta_matroid": self.delta_matroid,
        }


def classify_relation(R: Relation) -> RelationProperties:
    """Exhaustive closure checks; each failed property stores a witness.

    Witness shapes: (x, y) for Horn/dual-Horn, (x, y, z) for bijunctive
    and affine, a StepWitness for the two-step axiom.
    """
    tuples = R.sorted_tuples()
    witnesses = {}

    horn = True
    for x, y in itertools.product(tuples, repeat=2):
        if _bitop(lambda a, b: a & b, x, y) not in R:
            horn, witnesses["horn"] = False, (x, y)
            break
    dual_horn = True
    for x, y in itertools.product(tuples, repeat=2):
        if _bitop(lambda a, b: a | b, x, y) not in R:
            dual_horn, witnesses["dual_horn"] = False, (x, y)
            break
    bijunctive = True
    for x, y, z in itertools.product(tuples, repeat=3):
        maj = _bitop(lambda a, b, c: (a & b) | (a & c) | (b & c), x, y, z)
        if maj not in R:
            bijunctive, witnesses["bijunctive"] = False, (x, y, z)
            break
    affine = True
    for x, y, z in itertools.product(tuples, repeat=3):
        if _bitop(lambda a, b, c: a ^ b ^ c, x, y, z) not in R:
            affine, witnesses["affine"] = False, (x, y, z)
            break

    delta = True
    for x, y in itertools.product(tuples, repeat=2):
        if not delta:
            break
        for i in range(R.arity):
            if x[i] == y[i]:
                continue
            xp = x[:i] + (y[i],) + x[i + 1:]
            if xp in R:
                continue
            if not any(is_step(xp, xpp, y) for xpp in tuples):
                delta = False
                witnesses["delta_matroid"] = StepWitness(x, y, xp)
                break
    return RelationProperties(horn, dual_horn, bijunctive, affine, delta, witnesses)


# ---------------------------------------------------------------------------
# Formulas.
# ---------------------------------------------------------------------------

VAR, CONST = "var", "const"


@dataclass(frozen=True)
class Formula:
    """A conjunction of clauses over one relation.

    Each clause is a tuple of arguments ('var', name) or ('const', bit),
    of length equal to the relation's arity.
    """

    relation: Relation
    clauses: tuple

    def __post_init__(self):
        for clause in self.clauses:
            if len(clause) != self.relation.arity:
                raise NormsurfError("clause length does not match relation arity")
            for kind, val in clause:
                if kind == CONST and val not in (0, 1):
                    raise NormsurfError(f"bad constant {val}")
                if kind not in (VAR, CONST):
                    raise NormsurfError(f"bad argument kind {kind}")

    def variables(self):
        seen = []
        for clause in self.clauses:
            for kind, val in clause:
                if kind == VAR and val not in seen:
                    seen.append(val)
        return seen

    def occurrences(self):
        counts = {}
        for clause in self.clauses:
            for kind, val in clause:
                if kind == VAR:
                    counts[val] = counts.get(val, 0) + 1
        return counts

    def evaluate(self, assignment) -> bool:
        for clause in self.clauses:
            bits = tuple(
                assignment[val] if kind == VAR else val for kind, val in clause
            )
            if bits not in self.relation:
                return False
        return True


@dataclass(frozen=True)
class OccurrenceVerdict:
    ok: bool
    violators: tuple = ()

    def __bool__(self):
        return self.ok


def check_occurrence_bound(phi: Formula, bound: int = 2) -> OccurrenceVerdict:
    """Every variable may occur at most ``bound`` times across all clauses
    (two occurrences may share a clause)."""
    violators = tuple(
        v for v, c in sorted(phi.occurrences().items()) if c > bound
    )
    return OccurrenceVerdict(not violators, violators)


def solve_formula(phi: Formula, max_variables: int = 24):
    """Brute-force satisfiability oracle: first satisfying assignment in
    lexicographic variable order, or None for UNSAT.

    Refuses (BudgetExceededError) when 2^n enumeration is too large.
    """
    variables = sorted(phi.variables())
    if len(variables) > max_variables:
        raise BudgetExceededError(
            f"{len(variables)} variables exceed the 2^{max_variables} "
            f"enumeration budget"
        )
    for bits in itertools.product((0, 1), repeat=len(variables)):
        assignment = dict(zip(variables, bits))
        if phi.evaluate(assignment):
            return assignment
    return None


# ---------------------------------------------------------------------------
# Relation file: an arity line, then one bit-string per tuple.
# Formula file: optional 'relation <name>' header, then one clause per line,
# r whitespace-separated tokens: a variable like 'x12', or '0' / '1'.
# '#' starts comments in both.
# ---------------------------------------------------------------------------

BUILTIN_RELATIONS = {"R": RELATION_R, "EQ": EQUALITY_2}


def write_relation(R: Relation) -> str:
    lines = [str(R.arity)]
    lines.extend("".join(map(str, t)) for t in R.sorted_tuples())
    return "\n".join(lines) + "\n"


def read_relation(text: str, filename=None) -> Relation:
    arity = None
    tuples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if arity is None:
            try:
                arity = int(line)
            except ValueError:
                raise FormatError("expected the arity", filename, lineno, line)
            if arity < 1:
                raise FormatError("arity must be positive", filename, lineno)
            continue
        if len(line) != arity or any(c not in "01" for c in line):
            raise FormatError(
                f"expected a {arity}-bit string", filename, lineno, line
            )
        tuples.append(tuple(int(c) for c in line))
    if arity is None or not tuples:
        raise FormatError("relation file needs an arity and tuples", filename)
    return Relation.of(arity, tuples)


def write_formula(phi: Formula, relation_name: Optional[str] = None) -> str:
    lines = []
    if relation_name:
        lines.append(f"relation {relation_name}")
    for clause in phi.clauses:
        lines.append(" ".join(
            val if kind == VAR else str(val) for kind, val in clause
        ))
    return "\n".join(lines) + "\n"


def read_formula(text: str, filename=None,
                 relation: Optional[Relation] = None) -> Formula:
    """Parse a formula; a 'relation <name>' header picks a builtin
    relation unless one is supplied explicitly."""
    clauses = []
    rel = relation
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "relation" and not clauses:
            if len(tokens) != 2 or tokens[1] not in BUILTIN_RELATIONS:
                raise FormatError(
                    f"unknown relation {' '.join(tokens[1:])!r}", filename, lineno
                )
            if relation is None:
                rel = BUILTIN_RELATIONS[tokens[1]]
            continue
        clause = []
        for tok in tokens:
            if tok in ("0", "1"):
                clause.append((CONST, int(tok)))
            elif tok[0].isalpha():
                clause.append((VAR, tok))
            else:
                raise FormatError("bad clause token", filename, lineno, tok)
        clauses.append(tuple(clause))
    if rel is None:
        rel = RELATION_R
    if not clauses:
        raise FormatError("formula file has no clauses", filename)
    for lineno_check, clause in enumerate(clauses):
        if len(clause) != rel.arity:
            raise FormatError(
                f"clause has {len(clause)} arguments, relation arity is "
                f"{rel.arity}", filename
            )
    return Formula(rel, tuple(clauses))
