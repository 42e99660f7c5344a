"""Compile bounded-occurrence constraint formulas into immersibility
instances.

Three gadget kinds, each a block of tetrahedra with fixed coordinates:

* the *clause* gadget: six tetrahedra around a central edge, each holding
  two triangles and one quadrilateral, the quadrilaterals alternating
  between the two central-crossing types; each of its six internal
  interfaces carries exactly one two-instance arc type, so a gluing of
  the block is a bit vector in {0,1}^6 and the branch-free vectors are
  exactly the clause relation;
* the *tube*: six tetrahedra with two disks each, with exactly two
  two-instance interfaces; branch-free iff its two bits agree, so it
  transports a variable between two clause occurrences;
* the *constants*: one tetrahedron holding either two triangles (forcing
  bit 0) or two crossing quadrilaterals (forcing bit 1); both leave the
  same trace on their attachment pair.

Every gadget exposes labeled pairs of boundary faces sharing an edge.
Attaching pair to pair glues the faces crosswise so the shared edges
become one interior edge whose small block forces the adjacent bits to
agree.  Variables occurring once keep their clause pair on the boundary,
leaving the bit unconstrained.

With the simplicial option, each tube becomes two copies glued head to
head along their first pairs, which avoids self-identifications in the
quotient complex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .csp import VAR, Formula, RELATION_R, check_occurrence_bound
from .errors import FormatError, NormsurfError
from .gluing import GlobalGluing, SurfaceTracer, verify_immersed
from .normal_coords import NormalCoordinates, QUAD_02_13, QUAD_03_12
from .triangulation import FACE_VERTICES, Triangulation

#: Internal fan gluing used by every six-tetrahedron block: tet i's face 3
#: (vertices 012) meets tet i+1's face 2 (vertices 013), identity on the
#: central edge {0,1} and 2 -> 3 on the side vertex.
_FAN_PERM = (0, 1, 3)


@dataclass(frozen=True)
class FaceRole:
    """One face of a labeled pair, with its vertices in role order:
    the two pair-edge endpoints (triangle-carried level first, then
    quadrilateral-carried level) and the remaining vertex."""

    slot: tuple  # (tet, face)
    roles: tuple  # (end0, end1, third)

    def shifted(self, offset: int) -> "FaceRole":
        return FaceRole((self.slot[0] + offset, self.slot[1]), self.roles)


@dataclass(frozen=True)
class PairSpec:
    """A labeled pair of boundary faces sharing an edge."""

    first: FaceRole
    second: FaceRole

    def shifted(self, offset: int) -> "PairSpec":
        return PairSpec(self.first.shifted(offset), self.second.shifted(offset))


@dataclass(frozen=True)
class GadgetTemplate:
    kind: str
    tet_count: int
    internal_gluings: tuple  # of (slot, slot, perm)
    coordinate_rows: tuple   # of 7-tuples
    pairs: tuple             # labeled PairSpecs (clause: variable order)
    interface_sites: tuple   # two-choice site keys (clause: variable order)


def _fan_gluings(m: int):
    return tuple(((i, 3), ((i + 1) % m, 2), _FAN_PERM) for i in range(m))


def _clause_template() -> GadgetTemplate:
    rows = []
    for i in range(6):
        row = [0] * 7
        row[0] = row[1] = 1
        row[QUAD_02_13 if i % 2 == 0 else QUAD_03_12] = 1  # rising / falling
        rows.append(tuple(row))
    sites = []
    pairs = []
    for j in range(6):
        prev, here = (j - 1) % 6, j
        if j % 2 == 0:
            # Two-instance arc type at the level of vertex 0; the pair
            # faces share the side edge {0,2}(prev) == {0,3}(here).
            site = (here, 2, 0) if (here, 2) < (prev, 3) else (prev, 3, 0)
            pairs.append(PairSpec(
                FaceRole((prev, 1), (0, 2, 3)),
                FaceRole((here, 1), (0, 3, 2)),
            ))
        else:
            site = (prev, 3, 1)
            pairs.append(PairSpec(
                FaceRole((prev, 0), (1, 2, 3)),
                FaceRole((here, 0), (1, 3, 2)),
            ))
        sites.append(site)
    return GadgetTemplate(
        "clause", 6, _fan_gluings(6), tuple(rows), tuple(pairs), tuple(sites)
    )


def _tube_template() -> GadgetTemplate:
    def row(tri0=0, tri1=0, rise=0, fall=0):
        r = [0] * 7
        r[0], r[1], r[QUAD_02_13], r[QUAD_03_12] = tri0, tri1, rise, fall
        return tuple(r)

    rows = (
        row(tri0=1, fall=1),   # enters level 2, leaves level 1
        row(tri0=1, rise=1),
        row(tri0=1, tri1=1),
        row(tri1=1, rise=1),
        row(tri1=1, fall=1),
        row(tri0=1, tri1=1),
    )
    pairs = (
        PairSpec(FaceRole((0, 1), (0, 2, 3)), FaceRole((1, 1), (0, 3, 2))),  # A1
        PairSpec(FaceRole((3, 0), (1, 2, 3)), FaceRole((4, 0), (1, 3, 2))),  # A2
    )
    sites = ((0, 3, 0), (3, 3, 1))
    return GadgetTemplate("tube", 6, _fan_gluings(6), rows, pairs, sites)


def _constant_template(value: int) -> GadgetTemplate:
    row = [0] * 7
    if value == 0:
        row[0] = row[1] = 1                      # two triangles
    else:
        row[QUAD_02_13] = row[QUAD_03_12] = 1    # two crossing quadrilaterals
    pair = PairSpec(FaceRole((0, 2), (0, 1, 3)), FaceRole((0, 3), (0, 1, 2)))
    return GadgetTemplate(f"cg{value}", 1, (), (tuple(row),), (pair,), ())


_TEMPLATES = {
    "clause": _clause_template(),
    "tube": _tube_template(),
    "cg0": _constant_template(0),
    "cg1": _constant_template(1),
}


def build_gadget(kind: str) -> GadgetTemplate:
    """The fixed gadget templates; kinds: clause | tube | cg0 | cg1."""
    try:
        return _TEMPLATES[kind]
    except KeyError:
        raise NormsurfError(f"unknown gadget kind {kind!r}")


def gadget_triangulation(template: GadgetTemplate):
    T = (Triangulation.from_pairs(template.tet_count, template.internal_gluings)
         if template.internal_gluings
         else Triangulation(template.tet_count, {}))
    N = NormalCoordinates.from_rows(template.coordinate_rows)
    return T, N


def _pair_gluings(P: PairSpec, Q: PairSpec):
    """Glue pair P to pair Q crosswise, matching faces role for role so
    that arc types meet cut-vertex to cut-vertex across the shared edge."""

    def bij(src: FaceRole, dst: FaceRole):
        mapping = dict(zip(src.roles, dst.roles))
        face = src.slot[1]
        perm = tuple(mapping[v] for v in FACE_VERTICES[face])
        return (src.slot, dst.slot, perm)

    return [bij(P.second, Q.first), bij(Q.second, P.first)]


@dataclass(frozen=True)
class Occurrence:
    clause: int
    position: int  # 1-based variable position within the clause
    site: tuple    # global site key of the clause-interface bit


@dataclass
class CompiledInstance:
    """A formula compiled to (triangulation, coordinates) plus the maps
    needed to translate between assignments and gluing certificates."""

    T: Triangulation
    N: NormalCoordinates
    formula: Formula
    simplicial: bool
    clause_count: int
    var_occurrences: dict      # var -> [Occurrence, ...]
    const_occurrences: list    # [(clause, position, value, site key)]
    tube_sites: dict           # var -> tuple of tube-interface site keys

    def clause_site(self, clause: int, position: int):
        tet, face, cut = build_gadget("clause").interface_sites[position - 1]
        return (tet + 6 * clause, face, cut)


def compile_formula(phi: Formula, simplicial: bool = False) -> CompiledInstance:
    """One clause gadget per clause, a tube per twice-occurring variable
    (two glued copies of it under ``simplicial``), and a constant gadget
    per constant occurrence.  The output satisfies the matching equations,
    is a manifold with boundary, and uses only 0/1 coordinates.
    """
    if phi.relation != RELATION_R:
        raise NormsurfError("compilation targets the built-in 6-ary relation")
    occ = check_occurrence_bound(phi)
    if not occ:
        raise NormsurfError(
            f"variables occur more than twice: {', '.join(occ.violators)}"
        )

    clause_tpl = build_gadget("clause")
    tube_tpl = build_gadget("tube")

    rows = []
    gluing_pairs = []
    tet_base = 0

    clause_bases = []
    for ci, _ in enumerate(phi.clauses):
        clause_bases.append(tet_base)
        rows.extend(clause_tpl.coordinate_rows)
        gluing_pairs.extend(
            ((a[0] + tet_base, a[1]), (b[0] + tet_base, b[1]), perm)
            for a, b, perm in clause_tpl.internal_gluings
        )
        tet_base += clause_tpl.tet_count

    def clause_pair(ci, position) -> PairSpec:
        return clause_tpl.pairs[position - 1].shifted(clause_bases[ci])

    def clause_site(ci, position):
        tet, face, cut = clause_tpl.interface_sites[position - 1]
        return (tet + clause_bases[ci], face, cut)

    var_occurrences = {}
    const_occurrences = []
    for ci, clause in enumerate(phi.clauses):
        for pos, (kind, val) in enumerate(clause, start=1):
            if kind == VAR:
                var_occurrences.setdefault(val, []).append(
                    Occurrence(ci, pos, clause_site(ci, pos))
                )
            else:
                const_occurrences.append((ci, pos, val, clause_site(ci, pos)))

    tube_sites = {}
    for var in sorted(v for v, os in var_occurrences.items() if len(os) == 2):
        occ1, occ2 = var_occurrences[var]
        base1 = tet_base
        rows.extend(tube_tpl.coordinate_rows)
        gluing_pairs.extend(
            ((a[0] + base1, a[1]), (b[0] + base1, b[1]), perm)
            for a, b, perm in tube_tpl.internal_gluings
        )
        tet_base += tube_tpl.tet_count
        sites = [
            (t + base1, f, c) for t, f, c in tube_tpl.interface_sites
        ]
        if simplicial:
            base2 = tet_base
            rows.extend(tube_tpl.coordinate_rows)
            gluing_pairs.extend(
                ((a[0] + base2, a[1]), (b[0] + base2, b[1]), perm)
                for a, b, perm in tube_tpl.internal_gluings
            )
            tet_base += tube_tpl.tet_count
            sites.extend(
                (t + base2, f, c) for t, f, c in tube_tpl.interface_sites
            )
            # Head-to-head double tube: the two first pairs glue to each
            # other; each copy's second pair meets one clause occurrence.
            gluing_pairs.extend(_pair_gluings(
                tube_tpl.pairs[0].shifted(base1),
                tube_tpl.pairs[0].shifted(base2),
            ))
            attach1 = tube_tpl.pairs[1].shifted(base1)
            attach2 = tube_tpl.pairs[1].shifted(base2)
        else:
            attach1 = tube_tpl.pairs[0].shifted(base1)
            attach2 = tube_tpl.pairs[1].shifted(base1)
        gluing_pairs.extend(_pair_gluings(
            clause_pair(occ1.clause, occ1.position), attach1
        ))
        gluing_pairs.extend(_pair_gluings(
            clause_pair(occ2.clause, occ2.position), attach2
        ))
        tube_sites[var] = tuple(sites)

    for ci, pos, val, _site in const_occurrences:
        cg = build_gadget(f"cg{val}")
        rows.extend(cg.coordinate_rows)
        gluing_pairs.extend(_pair_gluings(
            clause_pair(ci, pos), cg.pairs[0].shifted(tet_base)
        ))
        tet_base += cg.tet_count

    T = Triangulation.from_pairs(tet_base, gluing_pairs)
    N = NormalCoordinates.from_rows(rows)
    return CompiledInstance(
        T, N, phi, simplicial, len(phi.clauses),
        var_occurrences, const_occurrences, tube_sites,
    )


def decode_gluing_to_assignment(ci: CompiledInstance, G: GlobalGluing) -> dict:
    """Read each variable's bit off its clause-side interface site
    (identity = 0, transposition = 1).  Only defined for immersed
    gluings; the result satisfies the compiled formula."""
    verdict = verify_immersed(ci.T, ci.N, G)
    if not verdict:
        raise NormsurfError(
            "gluing has a branch point; decoding is undefined"
        )
    assignment = {}
    for var, occurrences in sorted(ci.var_occurrences.items()):
        bits = []
        for occ in occurrences:
            perm = G.get(occ.site)
            if perm is None or len(perm) != 2:
                raise NormsurfError(f"site {occ.site} missing from the gluing")
            bits.append(0 if perm == (0, 1) else 1)
        if len(set(bits)) != 1:
            raise NormsurfError(
                f"occurrences of {var} decode to different bits; "
                f"the gluing cannot be immersed"
            )
        assignment[var] = bits[0]
    if not ci.formula.evaluate(assignment):
        raise NormsurfError("decoded assignment does not satisfy the formula")
    return assignment


def encode_assignment_to_gluing(ci: CompiledInstance, assignment: dict,
                                tracer: Optional[SurfaceTracer] = None) -> GlobalGluing:
    """Realize a satisfying assignment as a branch-free global gluing.

    Clause-interface bits follow the assignment and the constants; tube
    bits copy their variable, resolved against the attachment orientation
    by a two-way trial on the edges the tube touches.
    """
    if not ci.formula.evaluate(assignment):
        raise NormsurfError("assignment does not satisfy the formula")
    tracer = tracer or SurfaceTracer(ci.T, ci.N)

    def bit_perm(bit):
        return (0, 1) if bit == 0 else (1, 0)

    perms = {key: tuple(range(k)) for key, k in tracer.sites.items()}
    for var, occurrences in ci.var_occurrences.items():
        for occ in occurrences:
            perms[occ.site] = bit_perm(assignment[var])
    for _ci, _pos, val, site in ci.const_occurrences:
        perms[site] = bit_perm(val)

    # Edges whose trace involves a given site.
    edges_of_site = {}
    for eid, frame in tracer.frames.items():
        for per_level in frame.interfaces:
            for info in per_level:
                if info is not None:
                    edges_of_site.setdefault(info[0], set()).add(eid)

    for var, sites in sorted(ci.tube_sites.items()):
        affected = sorted(set().union(
            *(edges_of_site.get(site, set()) for site in sites)
        ))
        chosen = None
        for bit in (assignment[var], 1 - assignment[var]):
            for site in sites:
                perms[site] = bit_perm(bit)
            gluing = GlobalGluing(perms)
            if all(tracer.trace_edge(e, gluing, fast_fail=True) is not None
                   for e in affected):
                chosen = bit
                break
        if chosen is None:
            raise NormsurfError(
                f"no tube bit for {var} avoids a branch point; "
                f"assignment cannot be realized"
            )

    G = GlobalGluing(perms)
    verdict = verify_immersed(ci.T, ci.N, G)
    if not verdict:
        raise NormsurfError("encoded gluing unexpectedly has a branch point")
    return G


# ---------------------------------------------------------------------------
# Site map file: certificate translation data emitted next to the compiled
# triangulation and coordinates.  Lines:
#   clauses <n>
#   var <name> <occurrence#> <clause> <position> <tet>:<face>|<cut>
#   const <clause> <position> <value> <tet>:<face>|<cut>
#   tube <name> <tet>:<face>|<cut> [<tet>:<face>|<cut> ...]
# ---------------------------------------------------------------------------

def _site_str(site):
    tet, face, cut = site
    return f"{tet}:{face}|{cut}"


def _parse_site(tok, filename=None, lineno=None):
    try:
        tf, cut = tok.split("|")
        tet, face = tf.split(":")
        return (int(tet), int(face), int(cut))
    except ValueError:
        raise FormatError("malformed site", filename, lineno, tok)


def write_site_map(ci: CompiledInstance) -> str:
    lines = [f"clauses {ci.clause_count}"]
    for var, occurrences in sorted(ci.var_occurrences.items()):
        for i, occ in enumerate(occurrences, start=1):
            lines.append(
                f"var {var} {i} {occ.clause} {occ.position} {_site_str(occ.site)}"
            )
    for cl, pos, val, site in ci.const_occurrences:
        lines.append(f"const {cl} {pos} {val} {_site_str(site)}")
    for var, sites in sorted(ci.tube_sites.items()):
        lines.append(f"tube {var} " + " ".join(_site_str(s) for s in sites))
    return "\n".join(lines) + "\n"


def read_site_map(text: str, filename=None):
    """Parse a site map into (clause count, var occurrence dict, constant
    list, tube site dict), with sites as key tuples."""
    clauses = None
    var_occ = {}
    consts = []
    tubes = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]
        try:
            if kind == "clauses":
                clauses = int(tokens[1])
            elif kind == "var":
                var, _idx, cl, pos = tokens[1], int(tokens[2]), int(tokens[3]), int(tokens[4])
                site = _parse_site(tokens[5], filename, lineno)
                var_occ.setdefault(var, []).append(Occurrence(cl, pos, site))
            elif kind == "const":
                consts.append((
                    int(tokens[1]), int(tokens[2]), int(tokens[3]),
                    _parse_site(tokens[4], filename, lineno),
                ))
            elif kind == "tube":
                tubes[tokens[1]] = tuple(
                    _parse_site(tok, filename, lineno) for tok in tokens[2:]
                )
            else:
                raise FormatError("unknown site-map record", filename, lineno, kind)
        except (IndexError, ValueError):
            raise FormatError("malformed site-map line", filename, lineno, line)
    if clauses is None:
        raise FormatError("site map lacks the clause count", filename)
    return clauses, var_occ, consts, tubes
