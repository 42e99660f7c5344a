"""Local/global gluings, block-curve tracing, and the immersion verifier.

A *site* is a glued face pair together with one of its three arc types;
the arc instances on both sides are put in a canonical order and a local
gluing is a permutation matching side-1 indices to side-2 indices.  A
global gluing collects one permutation per nonempty interior site.

Around every interior edge, the disk instances meeting the edge form
segments (triangles horizontally at the level of the endpoint they cut
off, quadrilaterals diagonally between the two levels); matching segment
endpoints through the local gluings decomposes them into closed block
curves.  A curve of length ``w * fan_length`` winds ``w`` times around
the edge; any ``w >= 2`` is a branch point.  Verification is linear in
the total number of disk instances plus the sizes of the triangulation
and the certificate.

Site naming convention: a site is addressed from the smaller of its two
face slots, as ``(tet, face, cut_vertex)``; the stored permutation maps
canonical indices on that side to canonical indices on the other side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import FormatError, IncompleteGluingError, NormsurfError
from .normal_coords import (
    NormalCoordinates,
    arc_count,
    quad_for_arc,
    quad_type,
)
from .triangulation import (
    FACE_VERTICES,
    EdgeClass,
    Skeleton,
    Triangulation,
    classify_skeleton,
)

#: The three quad types, pairs listed with the 0-containing pair first.
_QUAD_PAIRS = {4: ((0, 1), (2, 3)), 5: ((0, 2), (1, 3)), 6: ((0, 3), (1, 2))}


def quad_pair_partner(qtype: int, v: int) -> int:
    """The vertex paired with ``v`` by a quad type; on face slot ``w``
    the quad's arc cuts off ``quad_pair_partner(qtype, w)``."""
    for pair in _QUAD_PAIRS[qtype]:
        if v in pair:
            return pair[0] if pair[1] == v else pair[1]
    raise NormsurfError(f"vertex {v} out of range")


def site_key(T: Triangulation, slot, cut_vertex: int):
    """Canonical address of the site at (slot, arc type): the smaller of
    the two face slots, with the cut vertex expressed on that side."""
    g = T.gluing(*slot)
    if g is None:
        raise NormsurfError(f"face slot {slot} is a boundary face; no site there")
    other = g[0]
    if slot <= other:
        return (slot[0], slot[1], cut_vertex)
    return (other[0], other[1], T.map_vertex(slot[0], slot[1], cut_vertex))


def site_sides(T: Triangulation, key):
    """Return (slotA, cutA, slotB, cutB) for a canonical site key."""
    tet, face, cut = key
    g = T.gluing(tet, face)
    if g is None:
        raise NormsurfError(f"site {key} names a boundary face")
    (tet2, face2), _ = g
    return (tet, face), cut, (tet2, face2), T.map_vertex(tet, face, cut)


def canonical_instance_order(T: Triangulation, N: NormalCoordinates, slot, cut_vertex: int):
    """Deterministic ordering of the arc instances at one side of a site.

    Triangle copies come first (copy 0 nearest the cut vertex), then the
    quadrilateral copies by their global copy index; a disk instance keeps
    one copy index on all of its faces.
    """
    tet, face = slot
    qt = quad_for_arc(face, cut_vertex)
    tris = [(cut_vertex, c) for c in range(N.get(tet, cut_vertex))]
    quads = [(qt, c) for c in range(N.get(tet, qt))]
    return tris + quads


def all_sites(T: Triangulation, N: NormalCoordinates):
    """All nonempty interior sites: dict key -> arc count (>= 1)."""
    sites = {}
    for slotA, slotB, _ in T.glued_pairs():
        for cutA in FACE_VERTICES[slotA[1]]:
            k = arc_count(T, N, slotA, cutA)
            kB = arc_count(T, N, slotB, T.map_vertex(*slotA, cutA))
            if k != kB:
                raise NormsurfError(
                    f"matching equation violated at {slotA}|{cutA}: {k} != {kB}"
                )
            if k >= 1:
                sites[(slotA[0], slotA[1], cutA)] = k
    return sites


class GlobalGluing:
    """One permutation per site, in one-line notation (side-A index ->
    side-B index).  Only nonempty sites are stored."""

    __slots__ = ("perms",)

    def __init__(self, perms: dict):
        clean = {}
        for key, perm in perms.items():
            perm = tuple(perm)
            if sorted(perm) != list(range(len(perm))):
                raise NormsurfError(f"site {key}: {perm} is not a permutation")
            clean[tuple(key)] = perm
        self.perms = clean

    def get(self, key):
        return self.perms.get(tuple(key))

    def items(self):
        return sorted(self.perms.items())

    def merged_with(self, other: "GlobalGluing") -> "GlobalGluing":
        merged = dict(self.perms)
        merged.update(other.perms)
        return GlobalGluing(merged)

    def __eq__(self, other):
        return isinstance(other, GlobalGluing) and self.perms == other.perms

    def __len__(self):
        return len(self.perms)

    def __repr__(self):
        return f"GlobalGluing(sites={len(self.perms)})"


def identity_gluing(T: Triangulation, N: NormalCoordinates) -> GlobalGluing:
    """Identity permutation at every nonempty interior site."""
    return GlobalGluing({k: tuple(range(v)) for k, v in all_sites(T, N).items()})


_L1, _L2 = 0, 1


@dataclass
class _EdgeFrame:
    """Precomputed trace structure for one interior edge."""

    edge: EdgeClass
    m: int
    # Per segment: (fan position, disk type, copy, exit level, exit index).
    seg_info: list
    # Per fan position and level: tuple of segment ids by enter index.
    enter_maps: list
    # Per interface j (before fan entry j) and level: (site key, forward, k)
    # or None when the arc count is zero.
    interfaces: list


@dataclass(frozen=True)
class EdgeCurves:
    edge_id: int
    fan_length: int
    windings: tuple
    curves: tuple  # per curve: tuple of (fan position, disk type, copy)

    @property
    def branch_free(self) -> bool:
        return all(w == 1 for w in self.windings)


@dataclass(frozen=True)
class BlockCurveReport:
    edges: tuple  # of EdgeCurves, interior edges only

    @property
    def branch_free(self) -> bool:
        return all(e.branch_free for e in self.edges)

    def witness(self):
        """First (edge, curve index) with winding >= 2, or None."""
        for e in self.edges:
            for i, w in enumerate(e.windings):
                if w >= 2:
                    return e, i
        return None


class SurfaceTracer:
    """Reusable block-curve tracer for a fixed (triangulation, coordinates).

    Building the tracer checks the matching equations implicitly: a
    violation surfaces as a conservation failure at some interface.
    """

    def __init__(self, T: Triangulation, N: NormalCoordinates,
                 skeleton: Optional[Skeleton] = None):
        self.T = T
        self.N = N
        self.skeleton = skeleton or classify_skeleton(T)
        self.sites = all_sites(T, N)
        self.frames = {}
        for ec in self.skeleton.edges:
            if not ec.is_boundary:
                self.frames[ec.id] = self._build_frame(ec)

    def _build_frame(self, ec: EdgeClass) -> _EdgeFrame:
        T, N = self.T, self.N
        m = len(ec.fan)
        seg_info = []
        enter_maps = []
        exit_counts = []
        for i, entry in enumerate(ec.fan):
            tet, p, q, u, v = entry.tet, entry.p, entry.q, entry.enter, entry.exit
            a = N.get(tet, p)
            b = N.get(tet, q)
            qr = quad_type(p, u)  # enters level 1, exits level 2
            qf = quad_type(p, v)  # enters level 2, exits level 1
            r = N.get(tet, qr)
            f = N.get(tet, qf)
            base = len(seg_info)
            l1, l2 = [], []
            for c in range(a):
                seg_info.append((i, p, c, _L1, c))
                l1.append(base + len(l1) + len(l2))
            for c in range(b):
                seg_info.append((i, q, c, _L2, c))
                l2.append(base + len(l1) + len(l2))
            # enter index of a triangle equals its copy; quads follow.
            for c in range(r):
                seg_info.append((i, qr, c, _L2, b + c))
                l1.append(base + len(l1) + len(l2))
            for c in range(f):
                seg_info.append((i, qf, c, _L1, a + c))
                l2.append(base + len(l1) + len(l2))
            enter_maps.append((tuple(l1), tuple(l2)))
            exit_counts.append((a + f, b + r))

        interfaces = []
        for j in range(m):
            prev = ec.fan[j - 1]
            here = ec.fan[j]
            slotL = (prev.tet, prev.exit)
            slotR = (here.tet, here.enter)
            g = T.gluing(*slotL)
            if g is None or g[0] != slotR:
                raise NormsurfError("fan interface does not match gluing data")
            per_level = []
            for lvl, (cutL, cutR) in enumerate(((prev.p, here.p), (prev.q, here.q))):
                kL = exit_counts[j - 1][lvl]
                kR = len(enter_maps[j][lvl])
                if kL != kR:
                    raise NormsurfError(
                        f"conservation violated at edge {ec.id} interface {j} "
                        f"level {lvl + 1}: {kL} leaving vs {kR} entering "
                        f"(matching equations do not hold)"
                    )
                if kL == 0:
                    per_level.append(None)
                    continue
                key = site_key(T, slotL, cutL)
                forward = key == (slotL[0], slotL[1], cutL)
                per_level.append((key, forward, kL))
            interfaces.append(tuple(per_level))
        return _EdgeFrame(ec, m, seg_info, enter_maps, interfaces)

    def interior_edges(self):
        return [ec for ec in self.skeleton.edges if not ec.is_boundary]

    def _site_perm(self, frame, j, lvl, gluing: GlobalGluing, inv_cache: dict):
        info = frame.interfaces[j][lvl]
        key, forward, k = info
        perm = gluing.get(key)
        if perm is None:
            raise IncompleteGluingError(f"gluing certificate lacks site {key}")
        if len(perm) != k:
            raise IncompleteGluingError(
                f"site {key}: permutation has {len(perm)} entries, arc count is {k}"
            )
        if forward:
            return perm
        inv = inv_cache.get(key)
        if inv is None:
            inv = [0] * len(perm)
            for i, p in enumerate(perm):
                inv[p] = i
            inv = tuple(inv)
            inv_cache[key] = inv
        return inv

    def trace_edge(self, edge_id: int, gluing: GlobalGluing,
                   fast_fail: bool = False):
        """Decompose the segments around one interior edge into curves.

        Returns an EdgeCurves, or None under ``fast_fail`` as soon as a
        curve fails to close after one lap (winding >= 2).
        """
        frame = self.frames[edge_id]
        m = frame.m
        nseg = len(frame.seg_info)
        inv_cache = {}
        perms = [
            [None if frame.interfaces[j][lvl] is None
             else self._site_perm(frame, j, lvl, gluing, inv_cache)
             for lvl in (_L1, _L2)]
            for j in range(m)
        ]
        seg_info = frame.seg_info
        enter_maps = frame.enter_maps
        visited = [False] * nseg
        curves = []
        windings = []
        for s0 in range(nseg):
            if visited[s0]:
                continue
            curve = []
            s = s0
            while True:
                visited[s] = True
                i, dtype, copy, lvl, idx = seg_info[s]
                curve.append((i, dtype, copy))
                j = (i + 1) % m
                idx2 = perms[j][lvl][idx]
                s = enter_maps[j][lvl][idx2]
                if s == s0:
                    break
                if fast_fail and len(curve) > m:
                    return None
            # A curve can close exactly when it exceeds one lap (length-1
            # fans), so the winding must be rechecked after closure.
            if fast_fail and len(curve) > m:
                return None
            windings.append(len(curve) // m)
            curves.append(tuple(curve))
        return EdgeCurves(edge_id, m, tuple(windings), tuple(curves))

    def trace(self, gluing: GlobalGluing, edge_ids=None) -> BlockCurveReport:
        if edge_ids is None:
            edge_ids = sorted(self.frames)
        return BlockCurveReport(tuple(self.trace_edge(e, gluing) for e in edge_ids))

    def check_coverage(self, gluing: GlobalGluing):
        """Every nonempty interior site must carry a correctly sized perm."""
        for key, k in sorted(self.sites.items()):
            perm = gluing.get(key)
            if perm is None:
                raise IncompleteGluingError(f"gluing certificate lacks site {key}")
            if len(perm) != k:
                raise IncompleteGluingError(
                    f"site {key}: permutation has {len(perm)} entries, "
                    f"arc count is {k}"
                )


def trace_block_curves(T: Triangulation, N: NormalCoordinates, G: GlobalGluing,
                       skeleton: Optional[Skeleton] = None) -> BlockCurveReport:
    """Closed block curves with winding numbers around every interior edge.

    Boundary edges yield open arcs and are skipped.  Requires G to cover
    all nonempty interior sites.
    """
    tracer = SurfaceTracer(T, N, skeleton)
    tracer.check_coverage(G)
    return tracer.trace(G)


@dataclass(frozen=True)
class ImmersionVerdict:
    ok: bool
    report: BlockCurveReport
    witness_edge: Optional[int] = None
    witness_curve: Optional[int] = None

    def __bool__(self):
        return self.ok


def verify_immersed(T: Triangulation, N: NormalCoordinates,
                    G: GlobalGluing,
                    skeleton: Optional[Skeleton] = None) -> ImmersionVerdict:
    """Accept iff the singular surface defined by G has no branch point.

    Rejections name a witness edge class and curve.  Linear in the sum of
    the coordinates plus the triangulation and certificate sizes.
    """
    report = trace_block_curves(T, N, G, skeleton)
    w = report.witness()
    if w is None:
        return ImmersionVerdict(True, report)
    edge_curves, curve_idx = w
    return ImmersionVerdict(False, report, edge_curves.edge_id, curve_idx)


# ---------------------------------------------------------------------------
# The canonical embedded ("parallel copies") gluing.
# ---------------------------------------------------------------------------

def _geometric_position(N, tet, face, cut, dtype, copy):
    """Nesting position of an arc instance on a face, nearest the cut
    vertex first.  Triangle arcs all sit nearer the cut vertex than quad
    arcs of the same type; quad copy order reverses on faces opposite a
    vertex of the pair not containing vertex 0."""
    vt = N.get(tet, cut)
    if dtype < 4:
        return copy
    vq = N.get(tet, dtype)
    first_pair = _QUAD_PAIRS[dtype][0]
    if face in first_pair:
        return vt + copy
    return vt + (vq - 1 - copy)


def _instance_at_geometric(N, tet, face, cut, pos):
    vt = N.get(tet, cut)
    if pos < vt:
        return pos
    qt = quad_for_arc(face, cut)
    vq = N.get(tet, qt)
    h = pos - vt
    first_pair = _QUAD_PAIRS[qt][0]
    copy = h if face in first_pair else vq - 1 - h
    return vt + copy


def parallel_copies_gluing(T: Triangulation, N: NormalCoordinates) -> GlobalGluing:
    """The gluing realized by the embedded normal surface.

    Requires N to satisfy the quadrilateral conditions (so the embedded
    reconstruction exists); arcs are matched across each face in nesting
    order, nearest the cut vertex first.
    """
    from .normal_coords import check_quad_conditions

    if not check_quad_conditions(T, N):
        raise NormsurfError("parallel-copies gluing needs the quadrilateral conditions")
    perms = {}
    for key, k in all_sites(T, N).items():
        slotA, cutA, slotB, cutB = site_sides(T, key)
        order_A = canonical_instance_order(T, N, slotA, cutA)
        perm = []
        for dtype, copy in order_A:
            g = _geometric_position(N, slotA[0], slotA[1], cutA, dtype, copy)
            perm.append(_instance_at_geometric(N, slotB[0], slotB[1], cutB, g))
        perms[key] = tuple(perm)
    return GlobalGluing(perms)


def relabel_disk_copies(T: Triangulation, N: NormalCoordinates, G: GlobalGluing,
                        tet: int, dtype: int, rho) -> GlobalGluing:
    """Apply a copy-relabeling bijection to one disk type of one
    tetrahedron, consistently at every site its arcs touch.  The verdict
    of verify_immersed is invariant under such relabelings."""
    rho = tuple(rho)
    if sorted(rho) != list(range(N.get(tet, dtype))):
        raise NormsurfError("rho must permute the copies of the disk type")
    if dtype < 4:
        arcs = [((tet, w), dtype) for w in range(4) if w != dtype]
    else:
        arcs = [((tet, w), quad_pair_partner(dtype, w)) for w in range(4)]
    perms = dict(G.perms)
    for slot, cut in arcs:
        if T.gluing(*slot) is None:
            continue
        key = site_key(T, slot, cut)
        if key not in perms:
            continue
        vt = N.get(slot[0], cut)
        offset = 0 if dtype < 4 else vt

        def shuffled(i):
            base = i - offset
            if 0 <= base < len(rho) and (dtype >= 4) == (i >= vt):
                return offset + rho[base]
            return i

        perm = perms[key]
        slotA, cutA, slotB, cutB = site_sides(T, key)
        new = list(perm)
        if (slot, cut) == (slotA, cutA):
            for i, p in enumerate(perm):
                new[shuffled(i)] = p
        else:
            for i, p in enumerate(perm):
                new[i] = shuffled(p)
        perms[key] = tuple(new)
    return GlobalGluing(perms)


# ---------------------------------------------------------------------------
# Certificate format: one line per site, 'tet:face|cut : p0 p1 ... p(k-1)',
# sites sorted lexicographically; '#' starts a comment.
# ---------------------------------------------------------------------------

def write_gluing(G: GlobalGluing) -> str:
    lines = []
    for (tet, face, cut), perm in G.items():
        lines.append(f"{tet}:{face}|{cut} : " + " ".join(str(p) for p in perm))
    return "\n".join(lines) + "\n"


def read_gluing(text: str, filename=None) -> GlobalGluing:
    perms = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise FormatError("malformed site line", filename, lineno)
        head, _, tail = line.partition(" : ")
        try:
            tf, cut = head.strip().split("|")
            tet, face = tf.split(":")
            key = (int(tet), int(face), int(cut))
            perm = tuple(int(tok) for tok in tail.split())
        except ValueError:
            raise FormatError("malformed site line", filename, lineno, line)
        if key in perms:
            raise FormatError(f"duplicate site {key}", filename, lineno)
        perms[key] = perm
    try:
        return GlobalGluing(perms)
    except NormsurfError as e:
        raise FormatError(str(e), filename)
