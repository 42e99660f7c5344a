"""Polynomial-time local immersibility testing via integer max-flow.

For an interior edge with fan length ``m``, build a directed graph on
vertices ``(column, level)`` with columns ``0..m`` and two levels: each
fan tetrahedron contributes four edges from its column to the next, one
per disk type meeting the edge (two horizontal triangle edges, two
diagonal quadrilateral edges), with capacity equal to the corresponding
normal coordinate.  Both ends of the block are the same interface of the
triangulation, so column ``0`` and column ``m`` are identified pointwise
(``s1 = t1 = x1`` and ``s2 = t2 = x2``).

The coordinates are immersible around the edge iff the maximum flow from
``s1`` to ``t1`` equals the total capacity leaving ``s1``; a saturating
flow, together with the leftover capacities (which then form a maximum
``s2 -> t2`` flow using every remaining unit), decomposes into paths that
close up into winding-one curves through the identified endpoints and
hence yields a branch-free gluing of the block.

Flows are exact over arbitrary-precision integers; augmentation uses
capacity scaling so the running time is polynomial in the bit length of
the coordinates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .errors import NormsurfError
from .gluing import GlobalGluing, site_key
from .normal_coords import NormalCoordinates, quad_type
from .triangulation import EdgeClass, Skeleton, Triangulation, classify_skeleton

_L1, _L2 = 0, 1

#: Edge kinds in per-tetrahedron order; horizontals precede diagonals so
#: that path decompositions are lexicographic.
KIND_TRI1, KIND_TRI2, KIND_RISE, KIND_FALL = "tri1", "tri2", "rise", "fall"


@dataclass(frozen=True)
class FlowEdge:
    index: int
    column: int            # fan position of the contributing tetrahedron
    kind: str
    tail: tuple            # (column, level)
    head: tuple
    capacity: int
    disk_type: int


@dataclass
class BlockFlowGraph:
    """The directed block graph of one interior edge fan."""

    edge_class: EdgeClass
    m: int
    edges: list

    @property
    def s1(self):
        return (0, _L1)

    @property
    def s2(self):
        return (0, _L2)

    @property
    def t1(self):
        return (self.m, _L1)

    @property
    def t2(self):
        return (self.m, _L2)

    def out_edges(self, node):
        return [e for e in self.edges if e.tail == node]

    def in_edges(self, node):
        return [e for e in self.edges if e.head == node]

    def source_bound(self) -> int:
        """Total capacity leaving s1, the saturation target."""
        return sum(e.capacity for e in self.out_edges(self.s1))


def build_block_graph(T: Triangulation, N: NormalCoordinates,
                      e: EdgeClass) -> BlockFlowGraph:
    """Four capacity-labeled edges per fan tetrahedron, cut at the fan's
    reference interface.  Rejects boundary edges."""
    if e.is_boundary:
        raise NormsurfError(f"edge class {e.id} is a boundary edge; no block graph")
    edges = []
    for i, entry in enumerate(e.fan):
        tet, p, q, u, v = entry.tet, entry.p, entry.q, entry.enter, entry.exit
        specs = (
            (KIND_TRI1, _L1, _L1, p),
            (KIND_TRI2, _L2, _L2, q),
            (KIND_RISE, _L1, _L2, quad_type(p, u)),
            (KIND_FALL, _L2, _L1, quad_type(p, v)),
        )
        for kind, ltail, lhead, disk in specs:
            edges.append(FlowEdge(
                len(edges), i, kind, (i, ltail), (i + 1, lhead),
                N.get(tet, disk), disk,
            ))
    return BlockFlowGraph(e, len(e.fan), edges)


def max_flow(g: BlockFlowGraph, source, sink):
    """Exact integer maximum flow via capacity-scaled augmenting paths.

    Returns (value, flows) with ``flows`` aligned to ``g.edges``.  The
    number of augmentations is O(E log C), so huge capacities are fine.
    """
    out_adj = {}
    in_adj = {}
    for e in g.edges:
        out_adj.setdefault(e.tail, []).append(e.index)
        in_adj.setdefault(e.head, []).append(e.index)
    flows = [0] * len(g.edges)
    maxcap = max((e.capacity for e in g.edges), default=0)
    delta = 1 << (maxcap.bit_length() - 1) if maxcap > 0 else 0

    def find_path(threshold):
        # BFS over the residual graph, only using residual >= threshold.
        parent = {source: None}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            if node == sink:
                break
            for ei in out_adj.get(node, ()):
                e = g.edges[ei]
                if e.capacity - flows[ei] >= threshold and e.head not in parent:
                    parent[e.head] = (ei, +1)
                    queue.append(e.head)
            for ei in in_adj.get(node, ()):
                e = g.edges[ei]
                if flows[ei] >= threshold and e.tail not in parent:
                    parent[e.tail] = (ei, -1)
                    queue.append(e.tail)
        if sink not in parent:
            return None
        path = []
        node = sink
        while parent[node] is not None:
            ei, direction = parent[node]
            path.append((ei, direction))
            node = g.edges[ei].tail if direction > 0 else g.edges[ei].head
        return path

    value = 0
    while delta >= 1:
        while True:
            path = find_path(delta)
            if path is None:
                break
            bottleneck = min(
                (g.edges[ei].capacity - flows[ei]) if d > 0 else flows[ei]
                for ei, d in path
            )
            for ei, d in path:
                flows[ei] += d * bottleneck
            value += bottleneck
        delta >>= 1
    return value, flows


@dataclass(frozen=True)
class LocalVerdict:
    edge_id: int
    ok: bool
    flow_value: int
    bound: int

    def __bool__(self):
        return self.ok


def local_immersibility_test(T: Triangulation, N: NormalCoordinates,
                             e: EdgeClass) -> LocalVerdict:
    """Accept iff max flow s1 -> t1 saturates the capacity leaving s1."""
    g = build_block_graph(T, N, e)
    bound = g.source_bound()
    value, _ = max_flow(g, g.s1, g.t1)
    return LocalVerdict(e.id, value == bound, value, bound)


def _decompose_paths(g: BlockFlowGraph, usage, source, consumed_start=None):
    """Split per-edge usage into source->sink paths, lexicographically by
    (column, kind order).  Unit numbering starts at ``consumed_start`` per
    edge so that disk copies stay globally distinct across flows."""
    remaining = list(usage)
    consumed = list(consumed_start) if consumed_start else [0] * len(g.edges)
    out_adj = {}
    kind_rank = {KIND_TRI1: 0, KIND_TRI2: 0, KIND_RISE: 1, KIND_FALL: 1}
    for e in sorted(g.edges, key=lambda e: (e.column, kind_rank[e.kind])):
        out_adj.setdefault(e.tail, []).append(e.index)
    paths = []
    while any(remaining[ei] > 0 for ei in out_adj.get(source, ())):
        node = source
        steps = []
        while node[0] < g.m:
            ei = next((i for i in out_adj.get(node, ()) if remaining[i] > 0), None)
            if ei is None:
                raise NormsurfError(
                    f"flow is not conserved at {node}; cannot decompose into paths"
                )
            steps.append((ei, consumed[ei]))
            consumed[ei] += 1
            remaining[ei] -= 1
            node = g.edges[ei].head
        paths.append(steps)
    return paths, remaining


def extract_gluing_from_flow(T: Triangulation, N: NormalCoordinates,
                             e: EdgeClass, flows) -> GlobalGluing:
    """Turn a saturating s1->t1 flow into a branch-free partial gluing.

    The leftover capacities form the maximum s2->t2 flow that uses every
    remaining unit; both flows are decomposed into paths, paths close into
    winding-one cycles through the identified block ends, and the cycle
    transits at each interface become local gluing permutations.

    Raises if the leftover fails to decompose completely, which signals a
    non-saturating input flow or violated matching equations.
    """
    g = build_block_graph(T, N, e)
    if len(flows) != len(g.edges):
        raise NormsurfError("flow assignment does not match the block graph")
    for ei, f in enumerate(flows):
        if f < 0 or f > g.edges[ei].capacity:
            raise NormsurfError(f"flow on edge {ei} out of range")
    leftover = [g.edges[ei].capacity - flows[ei] for ei in range(len(flows))]

    paths1, rem1 = _decompose_paths(g, flows, g.s1)
    if any(rem1):
        raise NormsurfError("s1 flow does not decompose into s1->t1 paths")
    paths2, rem2 = _decompose_paths(g, leftover, g.s2, consumed_start=flows)
    if any(rem2):
        raise NormsurfError(
            "residual flow fails to saturate: the input flow was not a "
            "saturating s1->t1 flow (or matching equations are violated)"
        )

    m = g.m
    fan = e.fan
    # Triangle coordinate per fan entry and level, to offset quad units.
    tri_count = [
        (N.get(entry.tet, entry.p), N.get(entry.tet, entry.q)) for entry in fan
    ]

    def canonical_index(ei, unit, side):
        edge = g.edges[ei]
        if edge.kind in (KIND_TRI1, KIND_TRI2):
            return unit
        col = edge.column
        if side == "L":  # arriving at an interface: the exit level
            lvl = edge.head[1]
        else:            # departing: the enter level
            lvl = edge.tail[1]
        return tri_count[col][lvl] + unit

    transits = {}  # (interface j, level) -> {L index: R index}

    def record(j, lvl, l_idx, r_idx):
        transits.setdefault((j, lvl), {})[l_idx] = r_idx

    for paths in (paths1, paths2):
        for steps in paths:
            for a in range(len(steps) - 1):
                ei_in, unit_in = steps[a]
                ei_out, unit_out = steps[a + 1]
                col, lvl = g.edges[ei_in].head
                record(col, lvl,
                       canonical_index(ei_in, unit_in, "L"),
                       canonical_index(ei_out, unit_out, "R"))
            # Close the cycle through the identified block ends.
            ei_last, unit_last = steps[-1]
            ei_first, unit_first = steps[0]
            lvl = g.edges[ei_last].head[1]
            if lvl != g.edges[ei_first].tail[1]:
                raise NormsurfError("path does not close onto its own level")
            record(0, lvl,
                   canonical_index(ei_last, unit_last, "L"),
                   canonical_index(ei_first, unit_first, "R"))

    perms = {}
    for (j, lvl), mapping in sorted(transits.items()):
        prev = fan[(j - 1) % m]
        here = fan[j % m]
        slotL = (prev.tet, prev.exit)
        cutL = prev.p if lvl == _L1 else prev.q
        key = site_key(T, slotL, cutL)
        k = len(mapping)
        if sorted(mapping) != list(range(k)) or sorted(mapping.values()) != list(range(k)):
            raise NormsurfError("incomplete transit table at an interface")
        sigma = tuple(mapping[i] for i in range(k))
        forward = key == (slotL[0], slotL[1], cutL)
        if not forward:
            inv = [0] * k
            for i, p in enumerate(sigma):
                inv[p] = i
            sigma = tuple(inv)
        if key in perms and perms[key] != sigma:
            raise NormsurfError(
                f"site {key} is crossed twice by this fan with conflicting "
                f"gluings; cannot emit a certificate"
            )
        perms[key] = sigma
    return GlobalGluing(perms)


def local_check_all(T: Triangulation, N: NormalCoordinates,
                    skeleton: Optional[Skeleton] = None, jobs: int = 1):
    """Run the local test around every interior edge.

    Verdicts are deterministic and independent of ``jobs``.
    """
    sk = skeleton or classify_skeleton(T)
    interior = [ec for ec in sk.edges if not ec.is_boundary]
    if jobs > 1 and len(interior) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda ec: local_immersibility_test(T, N, ec), interior
            ))
    else:
        results = [local_immersibility_test(T, N, ec) for ec in interior]
    return sorted(results, key=lambda v: v.edge_id)


# ---------------------------------------------------------------------------
# Randomized single-block instances (test generator; seeds never affect any
# verdict computed elsewhere).
# ---------------------------------------------------------------------------

def fan_triangulation(m: int) -> Triangulation:
    """A standalone block: m tetrahedra glued cyclically around the
    central edge {0, 1}, entering face 2 and leaving face 3.  A length-1
    fan self-glues the two faces of its one tetrahedron."""
    if m < 1:
        raise NormsurfError("fan_triangulation needs at least 1 tetrahedron")
    pairs = [((i, 3), ((i + 1) % m, 2), (0, 1, 3)) for i in range(m)]
    return Triangulation.from_pairs(m, pairs)


def random_block(rng, fan_length: Optional[int] = None, level_sum: Optional[int] = None,
                 max_fan: int = 6, max_coord: int = 3):
    """A random fan with coordinates satisfying the matching equations.

    Only the four disk types meeting the central edge are populated.  The
    per-interface level counts follow a closed random walk, so every
    matching equation holds by construction.
    """
    m = fan_length if fan_length is not None else rng.randint(2, max_fan)
    S = level_sum if level_sum is not None else rng.randint(1, max_coord)
    for _ in range(1000):
        alpha0 = rng.randint(0, S)
        alpha = alpha0
        rows = []
        ok = True
        for i in range(m):
            beta = S - alpha
            if i == m - 1:
                # Force closure: f - r == alpha0 - alpha.
                d = alpha0 - alpha
                lo, hi = max(0, -d), min(alpha, beta - d)
                if lo > hi:
                    ok = False
                    break
                r = rng.randint(lo, hi)
                f = r + d
            else:
                r = rng.randint(0, alpha)
                f = rng.randint(0, beta)
            a, b = alpha - r, beta - f
            if max(a, b, r, f) > max_coord:
                ok = False
                break
            rows.append((a, b, r, f))
            alpha = a + f
        if ok and alpha == alpha0:
            break
    else:
        raise NormsurfError("failed to sample a closed block")
    T = fan_triangulation(m)
    N = [0] * (7 * m)
    for i, (a, b, r, f) in enumerate(rows):
        N[7 * i + 0] = a            # Tri(0), level-1 horizontal
        N[7 * i + 1] = b            # Tri(1), level-2 horizontal
        N[7 * i + quad_type(0, 2)] = r   # rising diagonal
        N[7 * i + quad_type(0, 3)] = f   # falling diagonal
    return T, NormalCoordinates(N)
