"""Combinatorial triangulations built from tetrahedra glued along faces.

A triangulation is a collection of ``t`` tetrahedra, indexed ``0..t-1``,
with vertices ``0..3`` inside each tetrahedron.  Face ``f`` of a
tetrahedron is the triangle opposite vertex ``f``, so its vertex set is
``{0,1,2,3} - {f}``.  A gluing identifies two face slots via a bijection
of their vertex sets; the bijection is stored as the images, in order, of
the source face's ascending vertex list.  Unglued slots are boundary
faces.  Self-gluings (two faces of the same tetrahedron) are allowed, so
these objects need not be simplicial complexes.

Skeleton classification derives the edge and vertex identification
classes induced by the gluings, together with the ordered *fan* of
tetrahedra around every edge.  Fans are the backbone of all block-curve
and flow computations elsewhere in the package.

Conventions fixed here (the file format and every downstream module
depend on them):

* the fan around an interior edge starts at the lexicographically
  smallest directed incidence ``(tet, p, q, enter, exit)``, where
  ``(p, q)`` are the ordered edge endpoints and ``enter``/``exit`` are
  the two face slots containing the edge;
* boundary fans start at an unglued enter slot, smallest first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import FormatError, NormsurfError, ReversedEdgeError

#: Vertices of face ``f``, ascending.
FACE_VERTICES = tuple(tuple(v for v in range(4) if v != f) for f in range(4))

#: Position of vertex ``v`` in ``FACE_VERTICES[f]`` (None when v == f).
_FACE_POS = tuple(
    tuple(FACE_VERTICES[f].index(v) if v != f else None for v in range(4))
    for f in range(4)
)


def _invert_perm(face: int, perm, other_face: int):
    """Inverse of a face bijection, re-expressed for the target face."""
    inv = [None, None, None]
    dst = FACE_VERTICES[other_face]
    for i, v in enumerate(FACE_VERTICES[face]):
        inv[dst.index(perm[i])] = v
    return tuple(inv)


class Triangulation:
    """Immutable gluing data for ``tet_count`` tetrahedra.

    ``gluings`` maps a slot ``(tet, face)`` to ``((tet2, face2), perm)``
    where ``perm`` lists the images of the source face's ascending vertex
    list.  Both directions must be present and mutually inverse; a slot
    may not be glued to itself.
    """

    __slots__ = ("tet_count", "_gluings")

    def __init__(self, tet_count: int, gluings: dict):
        if tet_count < 1:
            raise NormsurfError("tet_count must be positive")
        self.tet_count = tet_count
        glu = {}
        for slot, (other, perm) in gluings.items():
            glu[self._check_slot(slot)] = (self._check_slot(other), tuple(perm))
        for slot, (other, perm) in glu.items():
            if slot == other:
                raise NormsurfError(f"slot {slot} glued to itself")
            if sorted(perm) != sorted(FACE_VERTICES[other[1]]):
                raise NormsurfError(
                    f"gluing {slot} -> {other}: perm {perm} does not map onto "
                    f"the vertices of face {other[1]}"
                )
            if other not in glu:
                raise NormsurfError(f"gluing of {slot} lacks its inverse at {other}")
            back_slot, back_perm = glu[other]
            if back_slot != slot or back_perm != _invert_perm(slot[1], perm, other[1]):
                raise NormsurfError(
                    f"gluings at {slot} and {other} are not inverse bijections"
                )
        self._gluings = glu

    def _check_slot(self, slot):
        tet, face = slot
        if not (0 <= tet < self.tet_count and 0 <= face < 4):
            raise NormsurfError(f"invalid face slot {slot}")
        return (tet, face)

    @classmethod
    def from_pairs(cls, tet_count: int, pairs) -> "Triangulation":
        """Build from one-sided data: an iterable of (slot, slot2, perm)."""
        glu = {}
        for slot, other, perm in pairs:
            slot, other, perm = tuple(slot), tuple(other), tuple(perm)
            if slot in glu or other in glu:
                raise NormsurfError(f"slot {slot} or {other} glued twice")
            if sorted(perm) != sorted(FACE_VERTICES[other[1]]):
                raise NormsurfError(
                    f"gluing {slot} -> {other}: perm {perm} does not map onto "
                    f"the vertices of face {other[1]}"
                )
            glu[slot] = (other, perm)
            glu[other] = (slot, _invert_perm(slot[1], perm, other[1]))
        return cls(tet_count, glu)

    @property
    def t(self) -> int:
        return self.tet_count

    def gluing(self, tet: int, face: int):
        """Return ((tet2, face2), perm) or None for a boundary slot."""
        return self._gluings.get((tet, face))

    def map_vertex(self, tet: int, face: int, v: int) -> int:
        """Image of vertex ``v`` of face ``(tet, face)`` under its gluing."""
        _, perm = self._gluings[(tet, face)]
        pos = _FACE_POS[face][v]
        if pos is None:
            raise NormsurfError(f"vertex {v} not on face {face}")
        return perm[pos]

    def glued_pairs(self):
        """Each glued face pair once, as (slotA, slotB, perm A->B), slotA < slotB."""
        return sorted(
            (slot, other, perm)
            for slot, (other, perm) in self._gluings.items()
            if slot < other
        )

    def boundary_slots(self):
        return sorted(
            (tet, face)
            for tet in range(self.tet_count)
            for face in range(4)
            if (tet, face) not in self._gluings
        )

    def is_closed(self) -> bool:
        return not self.boundary_slots()

    def __eq__(self, other):
        return (
            isinstance(other, Triangulation)
            and self.tet_count == other.tet_count
            and self._gluings == other._gluings
        )

    def __repr__(self):
        npairs = len(self._gluings) // 2
        return f"Triangulation(t={self.tet_count}, glued_pairs={npairs})"


@dataclass(frozen=True)
class FanEntry:
    """One traversal of a tetrahedron by the fan around an edge.

    ``(p, q)`` are the ordered edge endpoints in this tetrahedron's
    labels; the fan enters through face slot ``enter`` and leaves through
    ``exit``.  ``{p, q, enter, exit} == {0, 1, 2, 3}`` always.
    """

    tet: int
    p: int
    q: int
    enter: int
    exit: int


@dataclass(frozen=True)
class EdgeClass:
    id: int
    representatives: frozenset  # of (tet, (a, b)) with a < b
    is_boundary: bool
    fan: tuple  # of FanEntry

    @property
    def fan_length(self) -> int:
        return len(self.fan)


@dataclass(frozen=True)
class VertexClass:
    id: int
    representatives: frozenset  # of (tet, v)


@dataclass
class Skeleton:
    edges: list
    vertices: list
    edge_of: dict = field(default_factory=dict)  # (tet,(a,b)) -> EdgeClass
    vertex_of: dict = field(default_factory=dict)  # (tet,v) -> VertexClass


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        parent = self.parent
        root = parent.setdefault(x, x)
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _edge_successor(T: Triangulation, state):
    """Advance a directed edge incidence through the gluing at its exit."""
    tet, p, q, enter, exit_ = state
    g = T.gluing(tet, exit_)
    if g is None:
        return None
    (tet2, face2), _ = g
    p2 = T.map_vertex(tet, exit_, p)
    q2 = T.map_vertex(tet, exit_, q)
    return (tet2, p2, q2, face2, 6 - p2 - q2 - face2)


def _build_fan(T: Triangulation, incidences):
    """Order the incidences of one edge class into a fan.

    Returns (is_boundary, fan tuple).  Raises ReversedEdgeError when the
    walk revisits an incidence with swapped endpoints, which is exactly
    the reverse self-identification forbidden by the manifold criterion.
    """
    states = []
    for tet, (a, b) in incidences:
        c, d = (v for v in range(4) if v not in (a, b))
        for p, q in ((a, b), (b, a)):
            states.append((tet, p, q, c, d))
            states.append((tet, p, q, d, c))

    boundary_starts = [s for s in states if T.gluing(s[0], s[3]) is None]
    start = min(boundary_starts) if boundary_starts else min(states)

    fan = []
    seen_orders = {}
    cur = start
    limit = 4 * len(incidences) + 1
    while True:
        tet, p, q, enter, exit_ = cur
        key = (tet, frozenset((p, q)), enter)
        if key in seen_orders:
            if seen_orders[key] != (p, q):
                raise ReversedEdgeError(tet, (p, q))
            break  # closed back onto the start
        seen_orders[key] = (p, q)
        fan.append(FanEntry(tet, p, q, enter, exit_))
        if len(fan) > limit:
            raise NormsurfError("edge fan walk failed to terminate")
        nxt = _edge_successor(T, cur)
        if nxt is None:
            break
        cur = nxt

    if len(fan) != len(incidences):
        # A clean path or cycle visits each incidence exactly once; a
        # mismatch means the walk folded back onto itself.
        entry = fan[0]
        raise ReversedEdgeError(entry.tet, (entry.p, entry.q))
    return bool(boundary_starts), tuple(fan)


def classify_skeleton(T: Triangulation) -> Skeleton:
    """Edge and vertex classes induced by the face gluings.

    Interior edge classes carry a coherent cyclic fan; boundary classes a
    linear one.  Deterministic for a fixed input.  Raises
    ReversedEdgeError if some edge is identified to itself reversed.
    """
    uf_e = _UnionFind()
    uf_v = _UnionFind()
    for tet in range(T.tet_count):
        for v in range(4):
            uf_v.find((tet, v))
        for a in range(4):
            for b in range(a + 1, 4):
                uf_e.find((tet, (a, b)))
    for slotA, slotB, _ in T.glued_pairs():
        verts = FACE_VERTICES[slotA[1]]
        for v in verts:
            uf_v.union((slotA[0], v), (slotB[0], T.map_vertex(*slotA, v)))
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = verts[i], verts[j]
                a2 = T.map_vertex(*slotA, a)
                b2 = T.map_vertex(*slotA, b)
                uf_e.union((slotA[0], (a, b)), (slotB[0], tuple(sorted((a2, b2)))))

    groups_e = {}
    for tet in range(T.tet_count):
        for a in range(4):
            for b in range(a + 1, 4):
                groups_e.setdefault(uf_e.find((tet, (a, b))), []).append((tet, (a, b)))
    groups_v = {}
    for tet in range(T.tet_count):
        for v in range(4):
            groups_v.setdefault(uf_v.find((tet, v)), []).append((tet, v))

    edges = []
    edge_of = {}
    for idx, key in enumerate(sorted(groups_e, key=lambda k: min(groups_e[k]))):
        members = groups_e[key]
        is_boundary, fan = _build_fan(T, members)
        ec = EdgeClass(idx, frozenset(members), is_boundary, fan)
        edges.append(ec)
        for m in members:
            edge_of[m] = ec

    vertices = []
    vertex_of = {}
    for idx, key in enumerate(sorted(groups_v, key=lambda k: min(groups_v[k]))):
        members = groups_v[key]
        vc = VertexClass(idx, frozenset(members))
        vertices.append(vc)
        for m in members:
            vertex_of[m] = vc

    return Skeleton(edges, vertices, edge_of, vertex_of)


@dataclass(frozen=True)
class ManifoldVerdict:
    ok: bool
    reason: Optional[str] = None  # 'reversed_edge' | 'bad_link' | 'not_surface'
    detail: Optional[str] = None
    vertex_class: Optional[int] = None

    def __bool__(self):
        return self.ok


def _link_data(T: Triangulation, vc: VertexClass):
    """Euler characteristic and boundary structure of a vertex link.

    The link is assembled from one corner triangle per (tet, vertex)
    incidence; corner sides are identified through the face gluings.
    Returns (chi, boundary_circles, closed, is_surface).
    """
    corners = sorted(vc.representatives)
    F = len(corners)

    # Link edges: one per (tet, v, face w), w != v; a face gluing merges two.
    uf_e = _UnionFind()
    boundary_edges = []
    for tet, v in corners:
        for w in range(4):
            if w == v:
                continue
            g = T.gluing(tet, w)
            if g is None:
                boundary_edges.append((tet, v, w))
            else:
                (tet2, w2), _ = g
                uf_e.union((tet, v, w), (tet2, T.map_vertex(tet, w, v), w2))
    E = len({uf_e.find((tet, v, w)) for tet, v in corners for w in range(4) if w != v})

    # Link vertices sit on tetrahedron edges (v, a); identify via gluings.
    uf_v = _UnionFind()
    for tet, v in corners:
        for w in range(4):
            if w == v:
                continue
            g = T.gluing(tet, w)
            if g is None:
                continue
            (tet2, w2), _ = g
            v2 = T.map_vertex(tet, w, v)
            for a in range(4):
                if a in (v, w):
                    continue
                uf_v.union((tet, v, a), (tet2, v2, T.map_vertex(tet, w, a)))
    V = len({uf_v.find((tet, v, a)) for tet, v in corners for a in range(4) if a != v})

    chi = V - E + F

    # Boundary circles: every boundary link vertex must meet exactly two
    # boundary link edges; then circles = connected components.
    incident = {}
    for tet, v, w in boundary_edges:
        for a in FACE_VERTICES[w]:
            if a == v:
                continue
            incident.setdefault(uf_v.find((tet, v, a)), []).append((tet, v, w))
    is_surface = all(len(es) == 2 for es in incident.values())
    circles = 0
    if is_surface and boundary_edges:
        uf_b = _UnionFind()
        for tet, v, w in boundary_edges:
            nodes = [uf_v.find((tet, v, a)) for a in FACE_VERTICES[w] if a != v]
            uf_b.union(nodes[0], nodes[1])
        circles = len({uf_b.find(n) for n in incident})
    closed = not boundary_edges
    return chi, circles, closed, is_surface


def validate_manifold(T: Triangulation) -> ManifoldVerdict:
    """Manifold test: good vertex links and no reversed self-identified edge.

    Accepts iff every vertex link is a sphere (interior vertex) or a disk
    (boundary vertex) and no edge is identified to itself in reverse.
    """
    try:
        sk = classify_skeleton(T)
    except ReversedEdgeError as e:
        return ManifoldVerdict(False, "reversed_edge", str(e))
    for vc in sk.vertices:
        chi, circles, closed, is_surface = _link_data(T, vc)
        if not is_surface:
            return ManifoldVerdict(
                False, "not_surface",
                f"link of vertex class {vc.id} is not a surface", vc.id,
            )
        if closed:
            if chi != 2:
                return ManifoldVerdict(
                    False, "bad_link",
                    f"closed link of vertex class {vc.id} has chi={chi}, "
                    f"not a sphere", vc.id,
                )
        else:
            if chi != 1 or circles != 1:
                return ManifoldVerdict(
                    False, "bad_link",
                    f"link of vertex class {vc.id} has chi={chi} and "
                    f"{circles} boundary circles, not a disk", vc.id,
                )
    return ManifoldVerdict(True)


def double(T: Triangulation) -> Triangulation:
    """Glue two copies of T along their boundary by the identity.

    Copy 0 keeps tetrahedron indices, copy 1 is shifted by ``T.tet_count``.
    The result has no boundary faces.  Rejects a T without boundary.
    """
    boundary = T.boundary_slots()
    if not boundary:
        raise NormsurfError("double() requires a triangulation with boundary")
    t = T.tet_count
    pairs = []
    for slotA, slotB, perm in T.glued_pairs():
        pairs.append((slotA, slotB, perm))
        pairs.append(((slotA[0] + t, slotA[1]), (slotB[0] + t, slotB[1]), perm))
    for tet, face in boundary:
        pairs.append(((tet, face), (tet + t, face), FACE_VERTICES[face]))
    return Triangulation.from_pairs(2 * t, pairs)


def is_simplicial_complex(T: Triangulation, skeleton: Optional[Skeleton] = None):
    """Simplicial-complex conditions used by the compiler: no edge class
    with both endpoints in one vertex class, and no two distinct faces
    with the same edge-class triple.

    Returns (ok, detail).
    """
    sk = skeleton or classify_skeleton(T)
    for ec in sk.edges:
        tet, (a, b) = min(ec.representatives)
        if sk.vertex_of[(tet, a)] is sk.vertex_of[(tet, b)]:
            return False, f"edge class {ec.id} has identified endpoints"
    seen = {}
    for tet in range(T.tet_count):
        for face in range(4):
            g = T.gluing(tet, face)
            if g is not None and g[0] < (tet, face):
                continue  # count each glued pair once, from its smaller slot
            verts = FACE_VERTICES[face]
            triple = tuple(sorted(
                sk.edge_of[(tet, tuple(sorted((verts[i], verts[j]))))].id
                for i in range(3) for j in range(i + 1, 3)
            ))
            if triple in seen:
                return False, (
                    f"faces {seen[triple]} and {(tet, face)} share edge-class "
                    f"triple {triple}"
                )
            seen[triple] = (tet, face)
    return True, None


# ---------------------------------------------------------------------------
# Text format: one line per tetrahedron, four whitespace-separated tokens,
# each '-' (boundary) or 'tet:face:perm' with perm three digits giving the
# images of the source face's ascending vertex list.  '#' starts a comment.
# ---------------------------------------------------------------------------

def write_triangulation(T: Triangulation) -> str:
    lines = []
    for tet in range(T.tet_count):
        tokens = []
        for face in range(4):
            g = T.gluing(tet, face)
            if g is None:
                tokens.append("-")
            else:
                (tet2, face2), perm = g
                tokens.append(f"{tet2}:{face2}:{''.join(map(str, perm))}")
        lines.append(" ".join(tokens))
    return "\n".join(lines) + "\n"


def read_triangulation(text: str, filename=None) -> Triangulation:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 4:
            raise FormatError(
                f"expected 4 face tokens, got {len(tokens)}", filename, lineno
            )
        rows.append((lineno, tokens))
    if not rows:
        raise FormatError("empty triangulation file", filename)
    gluings = {}
    for tet, (lineno, tokens) in enumerate(rows):
        for face, tok in enumerate(tokens):
            if tok == "-":
                continue
            parts = tok.split(":")
            if len(parts) != 3 or len(parts[2]) != 3:
                raise FormatError("malformed gluing token", filename, lineno, tok)
            try:
                tet2, face2 = int(parts[0]), int(parts[1])
                perm = tuple(int(c) for c in parts[2])
            except ValueError:
                raise FormatError("malformed gluing token", filename, lineno, tok)
            if not (0 <= tet2 < len(rows)) or not (0 <= face2 < 4):
                raise FormatError("gluing target out of range", filename, lineno, tok)
            gluings[(tet, face)] = ((tet2, face2), perm)
    try:
        return Triangulation(len(rows), gluings)
    except NormsurfError as e:
        raise FormatError(str(e), filename)
