import itertools
import random

import pytest

from normsurf.csp import (
    CONST,
    EQUALITY_2,
    FULL_CUBE_2,
    Formula,
    RELATION_R,
    Relation,
    StepWitness,
    VAR,
    check_occurrence_bound,
    classify_relation,
    hamming,
    is_step,
    read_formula,
    read_relation,
    solve_formula,
    write_formula,
    write_relation,
)
from normsurf.errors import BudgetExceededError, FormatError, NormsurfError


def bits(s):
    return tuple(int(c) for c in s)


def test_relation_r_has_eleven_tuples():
    assert RELATION_R.arity == 6
    assert len(RELATION_R.tuples) == 11
    assert bits("000000") in RELATION_R
    assert bits("100000") not in RELATION_R


def test_classify_r_all_flags_false():
    props = classify_relation(RELATION_R)
    assert not props.horn
    assert not props.dual_horn
    assert not props.bijunctive
    assert not props.affine
    assert not props.schaefer
    assert not props.delta_matroid
    # every NO carries an independently checkable witness
    x, y = props.witnesses["horn"]
    assert x in RELATION_R and y in RELATION_R
    assert tuple(a & b for a, b in zip(x, y)) not in RELATION_R
    x, y = props.witnesses["dual_horn"]
    assert tuple(a | b for a, b in zip(x, y)) not in RELATION_R
    x, y, z = props.witnesses["bijunctive"]
    maj = tuple((a & b) | (a & c) | (b & c) for a, b, c in zip(x, y, z))
    assert maj not in RELATION_R
    x, y, z = props.witnesses["affine"]
    assert tuple(a ^ b ^ c for a, b, c in zip(x, y, z)) not in RELATION_R
    assert props.witnesses["delta_matroid"].check(RELATION_R)


def test_specific_counterexamples_hold():
    # the five specific counterexamples: conjunction, disjunction,
    # majority, xor, and the two-step triple
    x, y = bits("101000"), bits("110110")
    assert x in RELATION_R and y in RELATION_R
    assert bits("100000") == tuple(a & b for a, b in zip(x, y))
    assert bits("100000") not in RELATION_R
    assert bits("111110") == tuple(a | b for a, b in zip(x, y))
    assert bits("111110") not in RELATION_R
    z = bits("000000")
    maj = tuple((a & b) | (a & c) | (b & c) for a, b, c in zip(x, y, z))
    assert maj == bits("100000") and maj not in RELATION_R
    xor = tuple(a ^ b ^ c for a, b, c in zip(x, y, z))
    assert xor == bits("011110") and xor not in RELATION_R
    w = StepWitness(bits("111111"), bits("100010"), bits("101111"))
    assert w.check(RELATION_R)


def test_tube_relation_is_affine():
    props = classify_relation(EQUALITY_2)
    assert props.affine
    assert props.schaefer
    assert props.delta_matroid
    # xor-closure holds exhaustively
    for x, y, z in itertools.product(EQUALITY_2.tuples, repeat=3):
        assert tuple(a ^ b ^ c for a, b, c in zip(x, y, z)) in EQUALITY_2


def test_full_cube_all_flags():
    props = classify_relation(FULL_CUBE_2)
    assert props.horn and props.dual_horn and props.bijunctive and props.affine
    assert props.delta_matroid


def test_classification_is_tuple_order_independent():
    rng = random.Random(9)
    tuples = RELATION_R.sorted_tuples()
    rng.shuffle(tuples)
    assert classify_relation(Relation.of(6, tuples)) == classify_relation(RELATION_R)


def test_flags_match_direct_closures():
    # each flag equals the corresponding closure property, evaluated
    # independently here by brute force
    rng = random.Random(4)
    for _ in range(40):
        arity = rng.randint(1, 4)
        size = rng.randint(1, 2 ** arity)
        tuples = rng.sample(list(itertools.product((0, 1), repeat=arity)), size)
        R = Relation.of(arity, tuples)
        props = classify_relation(R)
        pairs = list(itertools.product(R.tuples, repeat=2))
        triples = list(itertools.product(R.tuples, repeat=3))
        assert props.horn == all(
            tuple(a & b for a, b in zip(x, y)) in R for x, y in pairs
        )
        assert props.dual_horn == all(
            tuple(a | b for a, b in zip(x, y)) in R for x, y in pairs
        )
        assert props.bijunctive == all(
            tuple((a & b) | (a & c) | (b & c) for a, b, c in zip(x, y, z)) in R
            for x, y, z in triples
        )
        assert props.affine == all(
            tuple(a ^ b ^ c for a, b, c in zip(x, y, z)) in R
            for x, y, z in triples
        )
        assert props.schaefer == (
            props.horn or props.dual_horn or props.bijunctive or props.affine
        )


def test_delta_matroid_witness_recheck(rng):
    for _ in range(60):
        arity = rng.randint(2, 5)
        size = rng.randint(1, 2 ** arity)
        tuples = rng.sample(list(itertools.product((0, 1), repeat=arity)), size)
        R = Relation.of(arity, tuples)
        props = classify_relation(R)
        if not props.delta_matroid:
            assert props.witnesses["delta_matroid"].check(R)


def test_step_definition():
    assert is_step(bits("000"), bits("010"), bits("011"))
    assert not is_step(bits("000"), bits("010"), bits("001"))
    assert hamming(bits("0110"), bits("1010")) == 2


def const_clause(s):
    return tuple((CONST, int(c)) for c in s)


def test_solve_formula_examples():
    sat = Formula(RELATION_R, (const_clause("000000"),))
    assert solve_formula(sat) == {}
    unsat = Formula(RELATION_R, (const_clause("100000"),))
    assert solve_formula(unsat) is None
    free = Formula(RELATION_R, (tuple((VAR, f"v{i}") for i in range(6)),))
    assignment = solve_formula(free)
    assert assignment is not None
    assert free.evaluate(assignment)


def test_solve_budget():
    clause = tuple((VAR, f"v{i}") for i in range(6))
    phi = Formula(RELATION_R, (clause,))
    with pytest.raises(BudgetExceededError):
        solve_formula(phi, max_variables=3)


def test_occurrence_bound():
    allconst = Formula(RELATION_R, (const_clause("000000"),))
    assert check_occurrence_bound(allconst).ok
    # twice, even inside a single clause
    v = ("var", "v")
    clause = (v, v) + const_clause("0101")
    assert check_occurrence_bound(Formula(RELATION_R, (clause,))).ok
    thrice = (v, v, v) + const_clause("010")
    verdict = check_occurrence_bound(Formula(RELATION_R, (thrice,)))
    assert not verdict.ok and verdict.violators == ("v",)


def test_relation_must_be_nonempty():
    with pytest.raises(NormsurfError):
        Relation.of(2, [])


def test_relation_file_round_trip():
    text = write_relation(RELATION_R)
    assert read_relation(text) == RELATION_R
    with pytest.raises(FormatError):
        read_relation("6\n01\n")
    with pytest.raises(FormatError):
        read_relation("")


def test_formula_file_round_trip():
    clauses = (
        ((VAR, "x1"), (CONST, 0), (CONST, 1), (VAR, "x2"), (CONST, 0), (VAR, "x1")),
    )
    phi = Formula(RELATION_R, clauses)
    text = write_formula(phi, relation_name="R")
    assert read_formula(text) == phi
    with pytest.raises(FormatError):
        read_formula("relation NOPE\nx 0 1 0 1 0\n")
    with pytest.raises(FormatError):
        read_formula("x1 0 1\n")  # arity mismatch against builtin R
