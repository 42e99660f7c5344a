"""Singular and immersed normal surfaces in triangulated 3-manifolds.

Library layout:

* ``triangulation`` -- gluing data, skeleton classes, manifold checks,
  doubling;
* ``normal_coords`` -- coordinate vectors, matching equations,
  quadrilateral conditions;
* ``gluing`` -- local/global gluings, block-curve tracing, the linear
  certificate verifier;
* ``local_flow`` -- the per-edge max-flow immersibility test and gluing
  extraction;
* ``solver`` -- the brute-force immersibility oracle and gadget relation
  extraction;
* ``csp`` -- Boolean relations, formulas, and tractability classifiers;
* ``reduction`` -- the formula-to-triangulation compiler;
* ``cli`` -- the command line surface.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    FormatError,
    IncompleteGluingError,
    NormsurfError,
    ReversedEdgeError,
)
from .triangulation import (
    EdgeClass,
    Skeleton,
    Triangulation,
    VertexClass,
    classify_skeleton,
    double,
    is_simplicial_complex,
    read_triangulation,
    validate_manifold,
    write_triangulation,
)
from .normal_coords import (
    NormalCoordinates,
    arc_count,
    check_matching,
    check_quad_conditions,
    read_coordinates,
    write_coordinates,
)
from .gluing import (
    BlockCurveReport,
    GlobalGluing,
    SurfaceTracer,
    canonical_instance_order,
    identity_gluing,
    parallel_copies_gluing,
    read_gluing,
    trace_block_curves,
    verify_immersed,
    write_gluing,
)
from .local_flow import (
    BlockFlowGraph,
    build_block_graph,
    extract_gluing_from_flow,
    local_check_all,
    local_immersibility_test,
    max_flow,
    random_block,
)
from .solver import SearchBudget, brute_force_immersible, extract_gadget_relation
from .csp import (
    Formula,
    RELATION_R,
    Relation,
    check_occurrence_bound,
    classify_relation,
    read_formula,
    read_relation,
    solve_formula,
    write_formula,
    write_relation,
)
from .reduction import (
    CompiledInstance,
    build_gadget,
    compile_formula,
    decode_gluing_to_assignment,
    encode_assignment_to_gluing,
    gadget_triangulation,
    read_site_map,
    write_site_map,
)
