"""Batch command line surface.

Commands: validate, check-coords, verify-gluing, solve, local-check,
compile, relation-props, double, gen-block.  Every command reads declared
input files, prints a deterministic line-oriented ``key=value`` report
(or JSON with ``--json``) including the library version and input
digests, and exits with:

* 0 -- accept / SAT / immersible,
* 1 -- reject / UNSAT / not immersible,
* 2 -- usage or format error,
* 3 -- budget exceeded.

``--seed`` exists only on the random instance generator; verdicts never
depend on it.  The default search budget can be set with the
``NORMSURF_MAX_PRODUCT`` environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .errors import BudgetExceededError, FormatError, NormsurfError
from .triangulation import (
    classify_skeleton,
    double,
    is_simplicial_complex,
    read_triangulation,
    validate_manifold,
    write_triangulation,
)
from .normal_coords import (
    check_matching,
    check_quad_conditions,
    read_coordinates,
    write_coordinates,
)
from .gluing import read_gluing, verify_immersed, write_gluing
from .local_flow import local_check_all, random_block
from .solver import SearchBudget, brute_force_immersible
from .csp import (
    BUILTIN_RELATIONS,
    classify_relation,
    read_formula,
    read_relation,
)
from .reduction import compile_formula, write_site_map

EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _load(path, reader, role, report):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as e:
        raise FormatError(str(e), filename=path)
    report[f"input.{role}.sha256"] = _digest(path)
    return reader(text, filename=path)


def _emit(report, as_json):
    if as_json:
        print(json.dumps(report, indent=2, default=str))
    else:
        for key, value in report.items():
            print(f"{key}={value}")


def _budget_from(args):
    default_product = float(os.environ.get("NORMSURF_MAX_PRODUCT", 1e8))
    return SearchBudget(
        max_sites=args.max_sites,
        max_arc_count=args.max_arc_count,
        max_product=args.max_product if args.max_product is not None else default_product,
        time_limit=args.time_limit,
    )


def _add_budget_flags(p):
    p.add_argument("--max-sites", type=int, default=64)
    p.add_argument("--max-arc-count", type=int, default=16)
    p.add_argument("--max-product", type=float, default=None,
                   help="bound on the product of k! over free sites "
                        "(default from NORMSURF_MAX_PRODUCT or 1e8)")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")


def _cmd_validate(args, report):
    T = _load(args.triangulation, read_triangulation, "triangulation", report)
    verdict = validate_manifold(T)
    report["tetrahedra"] = T.tet_count
    report["boundary_faces"] = len(T.boundary_slots())
    report["verdict"] = "manifold" if verdict.ok else "not-manifold"
    if not verdict.ok:
        report["reason"] = verdict.reason
        report["detail"] = verdict.detail
    return EXIT_ACCEPT if verdict.ok else EXIT_REJECT


def _cmd_check_coords(args, report):
    T = _load(args.triangulation, read_triangulation, "triangulation", report)
    N = _load(args.coordinates, read_coordinates, "coordinates", report)
    if N.t != T.tet_count:
        raise FormatError(
            f"coordinates are for {N.t} tetrahedra, triangulation has "
            f"{T.tet_count}", filename=args.coordinates,
        )
    matching = check_matching(T, N)
    quads = check_quad_conditions(T, N)
    report["matching"] = "pass" if matching.ok else "fail"
    if not matching.ok:
        slotA, slotB, cut, lhs, rhs = matching.violation
        report["matching.violation"] = (
            f"{slotA[0]}:{slotA[1]}|{cut} vs {slotB[0]}:{slotB[1]} ({lhs}!={rhs})"
        )
    report["quad_conditions"] = "pass" if quads.ok else "fail"
    if not quads.ok:
        report["quad_conditions.offenders"] = ",".join(map(str, quads.offenders))
    ok = matching.ok and (quads.ok or not args.require_quad_conditions)
    report["verdict"] = "accepted" if ok else "rejected"
    return EXIT_ACCEPT if ok else EXIT_REJECT


def _cmd_verify_gluing(args, report):
    T = _load(args.triangulation, read_triangulation, "triangulation", report)
    N = _load(args.coordinates, read_coordinates, "coordinates", report)
    G = _load(args.gluing, read_gluing, "gluing", report)
    verdict = verify_immersed(T, N, G)
    for ec in verdict.report.edges:
        report[f"edge.{ec.edge_id}.fan_length"] = ec.fan_length
        report[f"edge.{ec.edge_id}.windings"] = ",".join(map(str, ec.windings))
        report[f"edge.{ec.edge_id}.branch_free"] = str(ec.branch_free).lower()
    report["verdict"] = "immersed" if verdict.ok else "branched"
    if not verdict.ok:
        report["witness.edge"] = verdict.witness_edge
        report["witness.curve"] = verdict.witness_curve
    if args.plot_dir:
        from .diagrams import render_block_curves

        written = render_block_curves(T, N, G, args.plot_dir)
        for eid, path in sorted(written.items()):
            report[f"plot.edge.{eid}"] = path
    return EXIT_ACCEPT if verdict.ok else EXIT_REJECT


def _resolve_instance(args):
    if args.coordinates is None:
        base = args.triangulation
        if not os.path.isdir(base):
            raise FormatError(
                "solve needs a triangulation and coordinates, or a directory "
                "holding T.tri and N.coo", filename=base,
            )
        return os.path.join(base, "T.tri"), os.path.join(base, "N.coo")
    return args.triangulation, args.coordinates


def _cmd_solve(args, report):
    tri_path, coo_path = _resolve_instance(args)
    T = _load(tri_path, read_triangulation, "triangulation", report)
    N = _load(coo_path, read_coordinates, "coordinates", report)
    result = brute_force_immersible(T, N, _budget_from(args))
    report["search.nodes"] = result.nodes
    report["verdict"] = "immersible" if result.immersible else "not-immersible"
    if result.immersible and args.output:
        with open(args.output, "w") as fh:
            fh.write(write_gluing(result.witness))
        report["witness.file"] = args.output
    return EXIT_ACCEPT if result.immersible else EXIT_REJECT


def _cmd_local_check(args, report):
    T = _load(args.triangulation, read_triangulation, "triangulation", report)
    N = _load(args.coordinates, read_coordinates, "coordinates", report)
    skeleton = classify_skeleton(T)
    verdicts = local_check_all(T, N, skeleton, jobs=args.jobs)
    for v in verdicts:
        report[f"edge.{v.edge_id}.flow"] = v.flow_value
        report[f"edge.{v.edge_id}.bound"] = v.bound
        report[f"edge.{v.edge_id}.ok"] = str(v.ok).lower()
    ok = all(v.ok for v in verdicts)
    report["edges.interior"] = len(verdicts)
    report["verdict"] = "locally-immersible" if ok else "obstructed"
    if args.plot_dir:
        # Diagrams materialize one segment per disk instance; huge
        # coordinates make that impossible even when the flow test is fast.
        if N.total() > 100_000:
            report["plots"] = "skipped (instance too large to draw)"
            _emit_local_plots = False
        else:
            _emit_local_plots = True
        if _emit_local_plots:
            from .gluing import SurfaceTracer
            from .local_flow import build_block_graph, extract_gluing_from_flow, max_flow
            from .diagrams import render_block_curves

            tracer = SurfaceTracer(T, N, skeleton)
            edge_of = {ec.id: ec for ec in skeleton.edges}
            for v in verdicts:
                if not v.ok:
                    continue
                graph = build_block_graph(T, N, edge_of[v.edge_id])
                _, flows = max_flow(graph, graph.s1, graph.t1)
                partial = extract_gluing_from_flow(T, N, edge_of[v.edge_id], flows)
                written = render_block_curves(
                    T, N, partial, args.plot_dir, edge_ids=[v.edge_id], tracer=tracer
                )
                report[f"plot.edge.{v.edge_id}"] = written[v.edge_id]
    return EXIT_ACCEPT if ok else EXIT_REJECT


def _cmd_compile(args, report):
    phi = _load(args.formula, read_formula, "formula", report)
    ci = compile_formula(phi, simplicial=args.simplicial)
    os.makedirs(args.output, exist_ok=True)
    paths = {
        "T.tri": write_triangulation(ci.T),
        "N.coo": write_coordinates(ci.N),
        "sitemap.txt": write_site_map(ci),
    }
    for name, text in paths.items():
        with open(os.path.join(args.output, name), "w") as fh:
            fh.write(text)
    report["clauses"] = ci.clause_count
    report["tetrahedra"] = ci.T.tet_count
    report["variables"] = len(ci.var_occurrences)
    report["tubes"] = len(ci.tube_sites)
    report["constants"] = len(ci.const_occurrences)
    report["simplicial"] = str(bool(args.simplicial)).lower()
    ok, detail = is_simplicial_complex(ci.T)
    report["simplicial_complex"] = str(ok).lower()
    for name in paths:
        report[f"output.{name}"] = os.path.join(args.output, name)
    return EXIT_ACCEPT


def _cmd_relation_props(args, report):
    if args.builtin:
        if args.builtin not in BUILTIN_RELATIONS:
            raise FormatError(f"unknown builtin relation {args.builtin!r}")
        R = BUILTIN_RELATIONS[args.builtin]
        report["relation"] = f"builtin:{args.builtin}"
    elif args.relation:
        R = _load(args.relation, read_relation, "relation", report)
    else:
        raise FormatError("relation-props needs a relation file or --builtin")
    props = classify_relation(R)
    report["arity"] = R.arity
    report["tuples"] = len(R.tuples)
    for name, value in props.as_dict().items():
        report[name] = str(value).lower()
    for name, witness in sorted(props.witnesses.items()):
        if name == "delta_matroid":
            report["witness.delta_matroid"] = (
                f"x={_bits(witness.x)} y={_bits(witness.y)} x'={_bits(witness.xp)}"
            )
        else:
            report[f"witness.{name}"] = " ".join(_bits(w) for w in witness)
    return EXIT_ACCEPT


def _bits(t):
    return "".join(map(str, t))


def _cmd_double(args, report):
    T = _load(args.triangulation, read_triangulation, "triangulation", report)
    if T.is_closed():
        report["verdict"] = "rejected"
        report["reason"] = "triangulation has no boundary; doubling is misuse"
        return EXIT_REJECT
    D = double(T)
    with open(args.output, "w") as fh:
        fh.write(write_triangulation(D))
    report["tetrahedra"] = D.tet_count
    report["boundary_faces"] = 0
    report["output.triangulation"] = args.output
    if args.coordinates:
        N = _load(args.coordinates, read_coordinates, "coordinates", report)
        if args.coords_output is None:
            raise FormatError("--coords-output is required with --coordinates")
        with open(args.coords_output, "w") as fh:
            fh.write(write_coordinates(N.disjoint_union(N)))
        report["output.coordinates"] = args.coords_output
    report["verdict"] = "doubled"
    return EXIT_ACCEPT


def _cmd_gen_block(args, report):
    import random

    rng = random.Random(args.seed)
    T, N = random_block(rng, fan_length=args.fan_length,
                        level_sum=args.level_sum, max_fan=args.max_fan,
                        max_coord=args.max_coord)
    os.makedirs(args.output, exist_ok=True)
    tri_path = os.path.join(args.output, "block.tri")
    coo_path = os.path.join(args.output, "block.coo")
    with open(tri_path, "w") as fh:
        fh.write(write_triangulation(T))
    with open(coo_path, "w") as fh:
        fh.write(write_coordinates(N))
    report["seed"] = args.seed
    report["tetrahedra"] = T.tet_count
    report["output.triangulation"] = tri_path
    report["output.coordinates"] = coo_path
    return EXIT_ACCEPT


def build_parser():
    parser = argparse.ArgumentParser(
        prog="normsurf",
        description="Singular and immersed normal surface toolkit",
    )
    parser.add_argument("--version", action="version",
                        version=f"normsurf {__version__}")
    parser.add_argument("--json", action="store_true", help="JSON report")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="manifold test for a triangulation")
    p.add_argument("triangulation")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("check-coords", help="matching equations and quad conditions")
    p.add_argument("triangulation")
    p.add_argument("coordinates")
    p.add_argument("--require-quad-conditions", action="store_true")
    p.set_defaults(handler=_cmd_check_coords)

    p = sub.add_parser("verify-gluing", help="linear immersion certificate check")
    p.add_argument("triangulation")
    p.add_argument("coordinates")
    p.add_argument("gluing")
    p.add_argument("--plot-dir", help="render block-curve diagrams here")
    p.set_defaults(handler=_cmd_verify_gluing)

    p = sub.add_parser("solve", help="brute-force immersibility search")
    p.add_argument("triangulation",
                   help="triangulation file, or a directory with T.tri/N.coo")
    p.add_argument("coordinates", nargs="?")
    p.add_argument("-o", "--output", help="write a witness certificate here")
    _add_budget_flags(p)
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("local-check", help="max-flow local immersibility per edge")
    p.add_argument("triangulation")
    p.add_argument("coordinates")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plot-dir", help="render extracted block curves here")
    p.set_defaults(handler=_cmd_local_check)

    p = sub.add_parser("compile", help="compile a formula to an instance")
    p.add_argument("formula")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--simplicial", action="store_true",
                   help="double the tubes so the result is a simplicial complex")
    p.set_defaults(handler=_cmd_compile)

    p = sub.add_parser("relation-props", help="tractability flags of a relation")
    p.add_argument("relation", nargs="?")
    p.add_argument("--builtin", help="use a builtin relation (R, EQ)")
    p.set_defaults(handler=_cmd_relation_props)

    p = sub.add_parser("double", help="glue two copies along the boundary")
    p.add_argument("triangulation")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-c", "--coordinates")
    p.add_argument("--coords-output")
    p.set_defaults(handler=_cmd_double)

    p = sub.add_parser("gen-block", help="random single-block test instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fan-length", type=int, default=None)
    p.add_argument("--level-sum", type=int, default=None)
    p.add_argument("--max-fan", type=int, default=6)
    p.add_argument("--max-coord", type=int, default=3)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_gen_block)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"normsurf.version": __version__, "command": args.command}
    try:
        code = args.handler(args, report)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as e:
        report["verdict"] = "budget-exceeded"
        report["reason"] = str(e)
        _emit(report, args.json)
        return EXIT_BUDGET
    except NormsurfError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
