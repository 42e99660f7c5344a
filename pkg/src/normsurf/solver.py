"""Brute-force global immersibility oracle and gadget relation extraction.

The search enumerates one permutation per nonempty interior site,
depth-first.  Sites are ordered so that the edges with the fewest free
sites complete first; whenever the last free site of an edge fan is
assigned, that edge is traced and any curve that fails to close after a
single lap prunes the whole subtree.  Sites whose arc types touch no
interior edge cannot influence any block curve and are pinned to the
identity.

The search space is Prod k! over the free sites; it is estimated up
front and the search is refused when it exceeds the budget, which keeps
this strictly an oracle for small instances.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional

from .csp import Relation
from .errors import BudgetExceededError, NormsurfError
from .gluing import GlobalGluing, SurfaceTracer, all_sites
from .normal_coords import NormalCoordinates
from .triangulation import Skeleton, Triangulation


@dataclass(frozen=True)
class SearchBudget:
    max_sites: int = 64
    max_arc_count: int = 16
    max_product: float = 1e8       # bound on Prod k! over free sites
    time_limit: Optional[float] = None  # seconds

    def check_space(self, arities):
        if len(arities) > self.max_sites:
            raise BudgetExceededError(
                f"{len(arities)} sites exceed the budget of {self.max_sites}"
            )
        log_product = 0.0
        for k in arities:
            if k > self.max_arc_count:
                raise BudgetExceededError(
                    f"arc count {k} exceeds the budget of {self.max_arc_count}"
                )
            log_product += math.lgamma(k + 1)
        if log_product > math.log(max(self.max_product, 1.0)):
            raise BudgetExceededError(
                f"search space exp({log_product:.1f}) exceeds the budget of "
                f"{self.max_product:g} gluings"
            )


@dataclass
class SearchResult:
    immersible: bool
    witness: Optional[GlobalGluing] = None
    nodes: int = 0


def _plan(tracer: SurfaceTracer):
    """Choose the DFS site order and the edge -> completion-depth map.

    Free sites (arc count >= 2) are grouped so that edges needing the
    fewest of them complete as early as possible; forced sites (k == 1)
    are preassigned and never branched on.  Free sites whose arcs touch
    no interior edge cannot influence any block curve and are pinned to
    the identity rather than searched.
    """
    free_sites = {k: v for k, v in tracer.sites.items() if v >= 2}
    edge_sites = {}
    for eid, frame in tracer.frames.items():
        used = set()
        for per_level in frame.interfaces:
            for info in per_level:
                if info is not None and info[0] in free_sites:
                    used.add(info[0])
        edge_sites[eid] = used

    order = []
    placed = set()
    remaining_edges = sorted(
        edge_sites, key=lambda e: (len(edge_sites[e]), e)
    )
    for eid in remaining_edges:
        for key in sorted(edge_sites[eid]):
            if key not in placed:
                placed.add(key)
                order.append(key)
    pinned = [key for key in sorted(free_sites) if key not in placed]

    depth_of = {key: i for i, key in enumerate(order)}
    edges_done_at = {}
    for eid, used in edge_sites.items():
        depth = max((depth_of[k] for k in used), default=-1)
        edges_done_at.setdefault(depth, []).append(eid)
    return order, edges_done_at, pinned


def brute_force_immersible(T: Triangulation, N: NormalCoordinates,
                           budget: Optional[SearchBudget] = None,
                           tracer: Optional[SurfaceTracer] = None,
                           skeleton: Optional[Skeleton] = None) -> SearchResult:
    """Search for a branch-free global gluing; definitive NO if none.

    A YES always carries a witness accepted by verify_immersed.  Raises
    BudgetExceededError (distinct from NO) when the estimated space or
    the time limit is exceeded.

    The budget is checked before any per-instance structure is built, so
    oversized inputs (huge coordinates encode exponentially many disks)
    are refused cheaply.
    """
    budget = budget or SearchBudget()
    if tracer is None:
        budget.check_space(
            [k for k in all_sites(T, N).values() if k >= 2]
        )
        tracer = SurfaceTracer(T, N, skeleton)
    order, edges_done_at, pinned = _plan(tracer)
    budget.check_space([tracer.sites[k] for k in order])

    assignment = {
        key: tuple(range(k)) for key, k in tracer.sites.items() if k == 1
    }
    for key in pinned:
        assignment[key] = tuple(range(tracer.sites[key]))
    gluing = GlobalGluing(assignment)
    deadline = None
    if budget.time_limit is not None:
        deadline = time.monotonic() + budget.time_limit

    nodes = 0

    def edges_ok(depth) -> bool:
        for eid in edges_done_at.get(depth, ()):
            if tracer.trace_edge(eid, gluing, fast_fail=True) is None:
                return False
        return True

    perm_choices = {
        key: list(itertools.permutations(range(tracer.sites[key])))
        for key in order
    }

    def dfs(depth) -> bool:
        nonlocal nodes
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceededError("time limit exceeded during search")
        if depth == len(order):
            return True
        key = order[depth]
        for perm in perm_choices[key]:
            nodes += 1
            gluing.perms[key] = perm
            if edges_ok(depth) and dfs(depth + 1):
                return True
        del gluing.perms[key]
        return False

    # Edges all of whose sites are forced are traceable immediately.
    if not edges_ok(-1):
        return SearchResult(False, nodes=0)
    if dfs(0):
        witness = GlobalGluing(dict(gluing.perms))
        return SearchResult(True, witness, nodes)
    return SearchResult(False, nodes=nodes)


def extract_gadget_relation(T: Triangulation, N: NormalCoordinates,
                            interfaces,
                            tracer: Optional[SurfaceTracer] = None) -> Relation:
    """The relation realized by a two-choice gadget block.

    ``interfaces`` is an ordered list of site keys, each with arc count
    exactly 2; every unlisted site must have arc count at most 1.  Bit 0
    selects the identity local gluing and bit 1 the transposition; the
    result is the set of bit vectors whose gluing is branch-free, by
    exhaustive enumeration of the 2^r gluings.
    """
    tracer = tracer or SurfaceTracer(T, N)
    interfaces = [tuple(k) for k in interfaces]
    for key in interfaces:
        k = tracer.sites.get(key)
        if k != 2:
            raise NormsurfError(
                f"interface site {key} has arc count {k}, need exactly 2"
            )
    for key, k in tracer.sites.items():
        if key not in interfaces and k > 1:
            raise NormsurfError(
                f"unlisted site {key} has arc count {k} > 1; the gluing "
                f"space is not a Boolean cube"
            )

    base = {key: tuple(range(k)) for key, k in tracer.sites.items()
            if key not in interfaces}
    edge_ids = sorted(tracer.frames)
    tuples = []
    for bits in itertools.product((0, 1), repeat=len(interfaces)):
        perms = dict(base)
        for key, bit in zip(interfaces, bits):
            perms[key] = (0, 1) if bit == 0 else (1, 0)
        gluing = GlobalGluing(perms)
        if all(tracer.trace_edge(e, gluing, fast_fail=True) is not None
               for e in edge_ids):
            tuples.append(bits)
    return Relation.of(len(interfaces), tuples)
