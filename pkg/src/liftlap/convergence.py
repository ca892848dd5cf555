"""Refinement ladders, max-interior-error measurement, and order fitting."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .mesh import DomainKind, Mesh, generate_planar, mesh_stats, subdivide_midpoint
from .operators import OperatorKind, apply_operator, coordinate_laplacians
from .surfaces import TestFunction, exact_lb_graph

# default base resolutions: chosen so the coarsest meshes sit near the
# customary starting edge lengths for the three domain families
BASE_N = {
    DomainKind.THREE_DIRECTIONAL: 5,
    DomainKind.FOUR_DIRECTIONAL: 10,
    DomainKind.UNSTRUCTURED: 8,
}

NOISE_FLOOR = 1e-13
# a run whose errors never rise above this is reported as pure roundoff
_FLOOR_FLAG = 1e-9


@dataclass(frozen=True)
class LevelResult:
    r: float
    max_interior_error: float
    n_vertices: int
    wall_time: float


@dataclass
class ConvergenceReport:
    """Per-level errors and the fitted order for one operator/surface/domain."""

    operator: OperatorKind
    surface: str
    domain: DomainKind
    mode: str
    levels: list
    fitted_order: float
    fitted_constant: float
    at_noise_floor: bool


def graph_mesh(planar, surface):
    """Map a planar mesh through z = F(x, y); every vertex lands on the graph."""
    verts = planar.vertices.copy()
    verts[:, 2] = surface.f(verts[:, 0], verts[:, 1])
    return Mesh(verts, planar.faces)


def build_ladder(surface, kind, levels, seed=0, base_n=None, warmup=0):
    """Meshes for a refinement study, coarsest first.

    The base planar mesh is subdivided in the parameter plane and every level
    is re-mapped through the height field, so all vertices sample the surface
    exactly. ``warmup`` extra subdivisions are applied before the first
    reported level; on unstructured bases this lets the subdivision pattern
    settle so the per-level worst-vertex statistics compare like with like.
    """
    if levels < 2:
        raise ValueError("a ladder needs at least 2 levels")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    kind = DomainKind.parse(kind)
    planar = generate_planar(kind, base_n or BASE_N[kind], seed)
    for _ in range(warmup):
        planar = subdivide_midpoint(planar)
    out = [graph_mesh(planar, surface)]
    for _ in range(levels - 1):
        planar = subdivide_midpoint(planar)
        out.append(graph_mesh(planar, surface))
    return out


def measured_interior_mask(mesh):
    """Vertices that are neither on the boundary nor adjacent to it."""
    b = mesh.boundary_vertex_mask
    near = np.zeros(mesh.n_vertices, dtype=bool)
    e = mesh.edges
    if e.size:
        near[e[:, 0][b[e[:, 1]]]] = True
        near[e[:, 1][b[e[:, 0]]]] = True
    return ~(b | near)


def fit_order(levels):
    """Least-squares slope and constant of log(error) against log(r).

    ``levels`` is a sequence of (r, error) pairs; errors below the noise
    floor (1e-13) are excluded. Raises ValueError with fewer than two usable
    points.
    """
    pts = [(r, e) for r, e in levels if e >= NOISE_FLOOR]
    if len(pts) < 2:
        raise ValueError("fewer than 2 levels above the noise floor")
    r = np.log([p[0] for p in pts])
    e = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(r, e, 1)
    return float(slope), float(np.exp(intercept))


def _sample_field(tf, mesh):
    return np.asarray(tf.h(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=np.float64)


def _discrete_field(kind, mesh, tf, opts):
    if tf.mode == "coordinate":
        return coordinate_laplacians(kind, mesh, opts)
    return apply_operator(kind, mesh, _sample_field(tf, mesh), opts)


def _exact_values(surface, tf, mesh, mask):
    u = mesh.vertices[mask, 0]
    v = mesh.vertices[mask, 1]
    vals = exact_lb_graph(surface, tf, u, v)
    if tf.mode == "coordinate":
        out = np.full((mesh.n_vertices, 3), np.nan)
    else:
        out = np.full(mesh.n_vertices, np.nan)
    out[mask] = vals
    return out


def run_compare(operators, surface, kind, tf=None, levels=4, seed=0, opts=None,
                base_n=None, warmup=0):
    """Run several operators over one shared ladder.

    The ladder and exact values are computed once; per level each operator is
    timed on the operator evaluation alone. Returns one ConvergenceReport per
    operator, in input order.
    """
    if levels < 2:
        raise ValueError("need at least 2 levels")
    operators = [OperatorKind.parse(op) for op in operators]
    if not operators:
        raise ValueError("need at least one operator")
    kind = DomainKind.parse(kind)
    tf = tf or TestFunction.coordinate()
    ladder = build_ladder(surface, kind, levels, seed, base_n, warmup)
    per_op = {op: [] for op in operators}
    for level, mesh in enumerate(ladder):
        mask = measured_interior_mask(mesh)
        if not mask.any():
            raise RuntimeError("no measurable interior vertex at level %d" % level)
        exact = _exact_values(surface, tf, mesh, mask)
        r = mesh_stats(mesh).mesh_size_r
        for op in operators:
            t0 = time.perf_counter()
            field = _discrete_field(op, mesh, tf, opts)
            dt = time.perf_counter() - t0
            usable = mask & field.defined
            if not usable.any():
                raise RuntimeError(
                    "all interior vertices failed for %s at level %d" % (op.value, level)
                )
            diff = field.values[usable] - exact[usable]
            if tf.mode == "coordinate":
                errs = np.linalg.norm(diff, axis=1)
            else:
                errs = np.abs(diff)
            per_op[op].append(
                LevelResult(
                    r=r,
                    max_interior_error=float(errs.max()),
                    n_vertices=mesh.n_vertices,
                    wall_time=dt,
                )
            )

    reports = []
    for op in operators:
        lv = per_op[op]
        pairs = [(l.r, l.max_interior_error) for l in lv]
        try:
            order, const = fit_order(pairs)
            flagged = sum(1 for _, e in pairs if e >= NOISE_FLOOR) < len(pairs)
        except ValueError:
            order, const = 0.0, 0.0
            flagged = True
        if max(e for _, e in pairs) < _FLOOR_FLAG:
            flagged = True
        reports.append(
            ConvergenceReport(
                operator=op,
                surface=surface.name,
                domain=kind,
                mode=tf.mode,
                levels=lv,
                fitted_order=order,
                fitted_constant=const,
                at_noise_floor=flagged,
            )
        )
    return reports


def run_convergence(operator, surface, kind, tf=None, levels=4, seed=0, opts=None,
                    base_n=None, warmup=0):
    """Measure one operator over a refinement ladder; see run_compare."""
    if levels < 3:
        raise ValueError("need at least 3 levels for a meaningful fit")
    return run_compare(
        [operator], surface, kind, tf, levels, seed, opts, base_n, warmup
    )[0]


def report_to_csv(report):
    """One row per level: operator,surface,domain,level,r,error,nv,seconds."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["operator", "surface", "domain", "level", "r", "error", "nv", "seconds"]
    )
    for i, lv in enumerate(report.levels):
        writer.writerow(
            [
                report.operator.value,
                report.surface,
                report.domain.value,
                i,
                "%.17g" % lv.r,
                "%.17g" % lv.max_interior_error,
                lv.n_vertices,
                "%.6f" % lv.wall_time,
            ]
        )
    return buf.getvalue()


def compare_to_csv(reports):
    """Error matrix, one row per operator, plus fitted order and total time."""
    if not reports:
        raise ValueError("nothing to serialize")
    n_levels = len(reports[0].levels)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["operator"]
        + ["err_level%d" % i for i in range(n_levels)]
        + ["fitted_order", "seconds"]
    )
    for rep in reports:
        writer.writerow(
            [rep.operator.value]
            + ["%.17g" % lv.max_interior_error for lv in rep.levels]
            + ["%.6g" % rep.fitted_order,
               "%.6f" % sum(lv.wall_time for lv in rep.levels)]
        )
    return buf.getvalue()
