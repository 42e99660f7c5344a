"""Normal coordinate vectors and their combinatorial checks.

Each tetrahedron supports seven disk types: four triangles ``Tri(v)``
(cutting vertex ``v`` off) and three quadrilaterals separating a pair of
vertices from the complementary pair.  Coordinates are stored as a flat
vector of ``7t`` arbitrary-precision nonnegative integers in the fixed
order ``Tri(0..3), Quad(01|23), Quad(02|13), Quad(03|12)`` per
tetrahedron.

A normal arc type on a face is named by the vertex it cuts off.  The arc
type cutting ``v`` on face ``f`` collects arcs from exactly one triangle
type, ``Tri(v)``, and one quadrilateral type, the one pairing ``v`` with
the vertex ``f`` opposite the face.  The matching equation for a glued
face pair demands that the triangle+quadrilateral sum agree across the
gluing for each of the three arc types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import FormatError, NormsurfError
from .triangulation import FACE_VERTICES, Triangulation

TRI_0, TRI_1, TRI_2, TRI_3 = 0, 1, 2, 3
QUAD_01_23, QUAD_02_13, QUAD_03_12 = 4, 5, 6

DISK_NAMES = ("T0", "T1", "T2", "T3", "Q01|23", "Q02|13", "Q03|12")

_QUAD_OF_PAIR = {
    frozenset((0, 1)): QUAD_01_23, frozenset((2, 3)): QUAD_01_23,
    frozenset((0, 2)): QUAD_02_13, frozenset((1, 3)): QUAD_02_13,
    frozenset((0, 3)): QUAD_03_12, frozenset((1, 2)): QUAD_03_12,
}


def quad_type(a: int, b: int) -> int:
    """The quadrilateral type whose separated pairs include ``{a, b}``."""
    return _QUAD_OF_PAIR[frozenset((a, b))]


def tri_for_arc(cut_vertex: int) -> int:
    return cut_vertex


def quad_for_arc(face: int, cut_vertex: int) -> int:
    """Quad type contributing to the arc type cutting ``cut_vertex`` on
    ``face`` (the pair joins the cut vertex with the opposite vertex)."""
    return quad_type(cut_vertex, face)


def quad_crosses_edge(qtype: int, a: int, b: int) -> bool:
    """Does a quadrilateral of this type intersect edge ``{a, b}``?"""
    return quad_type(a, b) != qtype if a != b else False


class NormalCoordinates:
    """A 7t-vector of nonnegative integers indexed by (tet, disk type)."""

    __slots__ = ("values", "t")

    def __init__(self, values):
        values = tuple(int(v) for v in values)
        if len(values) % 7 != 0 or not values:
            raise NormsurfError(f"coordinate vector length {len(values)} is not 7t")
        if any(v < 0 for v in values):
            raise NormsurfError("coordinates must be nonnegative")
        self.values = values
        self.t = len(values) // 7

    @classmethod
    def zero(cls, t: int) -> "NormalCoordinates":
        return cls((0,) * (7 * t))

    @classmethod
    def from_rows(cls, rows) -> "NormalCoordinates":
        flat = []
        for row in rows:
            row = tuple(row)
            if len(row) != 7:
                raise NormsurfError("each tetrahedron needs 7 coordinates")
            flat.extend(row)
        return cls(flat)

    def get(self, tet: int, disk: int) -> int:
        return self.values[7 * tet + disk]

    def row(self, tet: int):
        return self.values[7 * tet: 7 * tet + 7]

    def with_value(self, tet: int, disk: int, value: int) -> "NormalCoordinates":
        vals = list(self.values)
        vals[7 * tet + disk] = value
        return NormalCoordinates(vals)

    def scaled(self, factor: int) -> "NormalCoordinates":
        return NormalCoordinates(tuple(v * factor for v in self.values))

    def disjoint_union(self, other: "NormalCoordinates") -> "NormalCoordinates":
        return NormalCoordinates(self.values + other.values)

    def total(self) -> int:
        return sum(self.values)

    def __eq__(self, other):
        return isinstance(other, NormalCoordinates) and self.values == other.values

    def __repr__(self):
        return f"NormalCoordinates(t={self.t}, total={self.total()})"


def _require_length(T: Triangulation, N: NormalCoordinates):
    if N.t != T.tet_count:
        raise NormsurfError(
            f"coordinate vector is for {N.t} tetrahedra, triangulation has "
            f"{T.tet_count}"
        )


def arc_count(T: Triangulation, N: NormalCoordinates, slot, cut_vertex: int) -> int:
    """Number of normal arcs of the given type on one side of a face:
    the triangle coordinate plus the matching quadrilateral coordinate."""
    _require_length(T, N)
    tet, face = slot
    if cut_vertex == face or not (0 <= cut_vertex < 4):
        raise NormsurfError(f"vertex {cut_vertex} is not on face {face}")
    return N.get(tet, tri_for_arc(cut_vertex)) + N.get(tet, quad_for_arc(face, cut_vertex))


@dataclass(frozen=True)
class MatchingVerdict:
    ok: bool
    # First violating site when not ok: (slotA, slotB, cutA, lhs, rhs).
    violation: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def check_matching(T: Triangulation, N: NormalCoordinates) -> MatchingVerdict:
    """Verify every matching equation.

    For each glued face pair and each of its three arc types, the
    triangle+quadrilateral count must agree across the gluing (arc types
    transported by the face bijection).  Reports the first violation in
    (slotA, slotB, cut vertex) order.
    """
    _require_length(T, N)
    for slotA, slotB, _ in T.glued_pairs():
        for cutA in FACE_VERTICES[slotA[1]]:
            cutB = T.map_vertex(*slotA, cutA)
            lhs = arc_count(T, N, slotA, cutA)
            rhs = arc_count(T, N, slotB, cutB)
            if lhs != rhs:
                return MatchingVerdict(False, (slotA, slotB, cutA, lhs, rhs))
    return MatchingVerdict(True)


@dataclass(frozen=True)
class QuadVerdict:
    ok: bool
    offenders: tuple = ()

    def __bool__(self):
        return self.ok


def check_quad_conditions(T: Triangulation, N: NormalCoordinates) -> QuadVerdict:
    """At most one nonzero quadrilateral coordinate per tetrahedron."""
    _require_length(T, N)
    offenders = tuple(
        tet for tet in range(T.tet_count)
        if sum(1 for q in (QUAD_01_23, QUAD_02_13, QUAD_03_12) if N.get(tet, q) > 0) > 1
    )
    return QuadVerdict(not offenders, offenders)


# ---------------------------------------------------------------------------
# Text format: t lines of 7 nonnegative decimal integers in disk-type order;
# '#' starts a comment.
# ---------------------------------------------------------------------------

def write_coordinates(N: NormalCoordinates) -> str:
    return "\n".join(" ".join(str(v) for v in N.row(tet)) for tet in range(N.t)) + "\n"


def read_coordinates(text: str, filename=None, tet_count: Optional[int] = None) -> NormalCoordinates:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 7:
            raise FormatError(
                f"expected 7 coordinates, got {len(tokens)}", filename, lineno
            )
        try:
            row = [int(tok) for tok in tokens]
        except ValueError as e:
            raise FormatError("not an integer", filename, lineno, str(e))
        if any(v < 0 for v in row):
            raise FormatError("coordinates must be nonnegative", filename, lineno)
        rows.append(row)
    if not rows:
        raise FormatError("empty coordinates file", filename)
    if tet_count is not None and len(rows) != tet_count:
        raise FormatError(
            f"coordinates for {len(rows)} tetrahedra, expected {tet_count}", filename
        )
    return NormalCoordinates.from_rows(rows)
