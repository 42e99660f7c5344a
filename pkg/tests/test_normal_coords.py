import random

import pytest

from normsurf.errors import FormatError, NormsurfError
from normsurf.normal_coords import (
    NormalCoordinates,
    arc_count,
    check_matching,
    check_quad_conditions,
    quad_for_arc,
    quad_type,
    read_coordinates,
    write_coordinates,
)
from normsurf.reduction import build_gadget, gadget_triangulation
from normsurf.triangulation import FACE_VERTICES, Triangulation


def test_quad_type_table():
    assert quad_type(0, 1) == quad_type(2, 3) == 4
    assert quad_type(0, 2) == quad_type(1, 3) == 5
    assert quad_type(0, 3) == quad_type(1, 2) == 6


def test_zero_vector_accepted(clause_block):
    T, _, _ = clause_block
    zero = NormalCoordinates.zero(T.tet_count)
    assert check_matching(T, zero).ok
    assert check_quad_conditions(T, zero).ok


def test_clause_coordinates_match(clause_block):
    T, N, _ = clause_block
    assert check_matching(T, N).ok
    # two triangles and one quadrilateral per tetrahedron
    for tet in range(T.tet_count):
        row = N.row(tet)
        assert sum(row[:4]) == 2 and sum(row[4:]) == 1


def test_incremented_triangle_breaks_matching(clause_block):
    T, N, _ = clause_block
    bad = N.with_value(0, 0, N.get(0, 0) + 1)
    verdict = check_matching(T, bad)
    assert not verdict.ok
    slotA, slotB, cut, lhs, rhs = verdict.violation
    # recompute both sides of the violated equation by hand
    tetA, faceA = slotA
    lhs_manual = bad.get(tetA, cut) + bad.get(tetA, quad_for_arc(faceA, cut))
    cutB = T.map_vertex(tetA, faceA, cut)
    tetB, faceB = slotB
    rhs_manual = bad.get(tetB, cutB) + bad.get(tetB, quad_for_arc(faceB, cutB))
    assert (lhs, rhs) == (lhs_manual, rhs_manual)
    assert lhs != rhs
    # the violated interface is on the central fan: both slots are fan faces
    assert faceA in (2, 3) and faceB in (2, 3)


def test_quad_conditions_on_constant_gadgets():
    T1, N1 = gadget_triangulation(build_gadget("cg1"))
    verdict = check_quad_conditions(T1, N1)
    assert not verdict.ok and verdict.offenders == (0,)
    T0, N0 = gadget_triangulation(build_gadget("cg0"))
    assert check_quad_conditions(T0, N0).ok


def test_arc_count_examples(clause_block):
    T, N, tpl = clause_block
    zero = NormalCoordinates.zero(T.tet_count)
    assert arc_count(T, zero, (0, 2), 0) == 0
    # a clause interface arc type carrying one triangle and one quad
    tet, face, cut = tpl.interface_sites[0]
    assert arc_count(T, N, (tet, face), cut) == 2
    # CG1 pair faces carry one arc at each pair-edge level
    T1, N1 = gadget_triangulation(build_gadget("cg1"))
    for face in (2, 3):
        counts = sorted(arc_count(T1, N1, (0, face), cv)
                        for cv in FACE_VERTICES[face])
        assert counts == [0, 1, 1]


def test_matching_symmetric_under_relabeling(clause_block):
    # permuting tetrahedron labels swaps the sides of face pairs; the
    # verdict must not change
    T, N, _ = clause_block
    rng = random.Random(1)
    order = list(range(T.tet_count))
    rng.shuffle(order)
    relabel = {old: new for new, old in enumerate(order)}
    pairs = [
        ((relabel[a[0]], a[1]), (relabel[b[0]], b[1]), perm)
        for a, b, perm in T.glued_pairs()
    ]
    T2 = Triangulation.from_pairs(T.tet_count, pairs)
    rows = [N.row(old) for old in order]
    N2 = NormalCoordinates.from_rows(rows)
    assert check_matching(T2, N2).ok == check_matching(T, N).ok
    bad = N.with_value(2, 1, 5)
    bad2 = NormalCoordinates.from_rows([bad.row(old) for old in order])
    assert check_matching(T2, bad2).ok == check_matching(T, bad).ok is False


def test_arbitrary_precision_entries(clause_block):
    T, N, _ = clause_block
    scaled = N.scaled(1 << 300)
    assert check_matching(T, scaled).ok
    assert scaled.total() == N.total() << 300


def test_length_mismatch_rejected(clause_block):
    T, _, _ = clause_block
    with pytest.raises(NormsurfError):
        check_matching(T, NormalCoordinates.zero(T.tet_count + 1))


def test_file_round_trip(clause_block):
    _, N, _ = clause_block
    assert read_coordinates(write_coordinates(N)) == N


def test_format_errors():
    with pytest.raises(FormatError):
        read_coordinates("1 2 3\n")
    with pytest.raises(FormatError):
        read_coordinates("1 2 3 4 5 6 x\n")
    with pytest.raises(FormatError):
        read_coordinates("1 2 3 4 5 6 -7\n")
    with pytest.raises(FormatError):
        read_coordinates("# only comments\n")
