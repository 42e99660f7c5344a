"""Schematic block-curve diagrams rendered to static image files.

The drawing is the abstract block picture used throughout: interfaces as
vertical lines, one column per fan tetrahedron, triangle segments as
horizontal lines at their level, quadrilateral segments as diagonals, and
curves colored by their decomposition class.  Windings over 1 are flagged
in the title.
"""

from __future__ import annotations

import os

from .gluing import GlobalGluing, SurfaceTracer
from .normal_coords import NormalCoordinates, quad_type
from .triangulation import Triangulation

_LEVEL_GAP = 1.5
_INSTANCE_GAP = 0.11


def _segment_geometry(entry, N, dtype, copy):
    """((y_enter, y_exit)) for one segment in column coordinates."""
    tet, p, q, u, v = entry.tet, entry.p, entry.q, entry.enter, entry.exit
    a, b = N.get(tet, p), N.get(tet, q)
    if dtype == p:
        return copy * _INSTANCE_GAP, copy * _INSTANCE_GAP
    if dtype == q:
        return _LEVEL_GAP + copy * _INSTANCE_GAP, _LEVEL_GAP + copy * _INSTANCE_GAP
    if dtype == quad_type(p, u):   # rising: enters level 1, leaves level 2
        return (a + copy) * _INSTANCE_GAP, _LEVEL_GAP + (b + copy) * _INSTANCE_GAP
    return _LEVEL_GAP + (b + copy) * _INSTANCE_GAP, (a + copy) * _INSTANCE_GAP


def render_block_curves(T: Triangulation, N: NormalCoordinates, G: GlobalGluing,
                        out_dir, edge_ids=None, tracer=None):
    """Write one PNG per interior edge; returns {edge id: path}."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tracer = tracer or SurfaceTracer(T, N)
    if edge_ids is None:
        edge_ids = sorted(tracer.frames)
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    for eid in edge_ids:
        frame = tracer.frames[eid]
        curves = tracer.trace_edge(eid, G)
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * frame.m + 1), 3.2))
        cmap = plt.get_cmap("tab10")
        for ci, curve in enumerate(curves.curves):
            color = cmap(ci % 10)
            for i, dtype, copy in curve:
                y0, y1 = _segment_geometry(frame.edge.fan[i], N, dtype, copy)
                ax.plot([i, i + 1], [y0, y1], color=color, linewidth=1.6)
        for j in range(frame.m + 1):
            ax.axvline(j, color="0.8", linestyle=":", linewidth=0.8)
        ax.set_xticks(range(frame.m + 1))
        ax.set_yticks([0, _LEVEL_GAP])
        ax.set_yticklabels(["level 1", "level 2"])
        ax.set_xlabel("interfaces (ends identified)")
        windings = ",".join(str(w) for w in curves.windings)
        status = "branch-free" if curves.branch_free else "BRANCH POINT"
        ax.set_title(f"edge {eid}: windings {windings} ({status})")
        fig.tight_layout()
        path = os.path.join(out_dir, f"edge_{eid}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written[eid] = path
    return written
