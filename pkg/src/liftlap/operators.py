"""Per-vertex discrete Laplace-Beltrami operators and mean-curvature vectors."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateConfiguration, DegenerateFace, ZeroDenominator
from .lifting import (
    frame_from_normal,
    lift_one_ring,
    tangent_frame,
    tangent_frames,
)
from .mesh import one_ring
from .stencil import (
    PointSet2D,
    _select_closest,
    solve_configuration,
    solve_many,
    solve_max_denominator,
)

_SIN_TOL = 1e-12  # angles within 1e-12 of 0 or pi count as degenerate

# a stencil is accepted outright when its denominator reaches this fraction of
# the mean squared point radius (the symmetric 5-point stencil scores 2.0);
# anything weaker amplifies the truncation error and triggers the wider
# max-denominator rescue before being used as a last resort
STENCIL_QUALITY_MIN = 0.5


class OperatorKind(Enum):
    LTL = "ltl"
    WEIGHTED_UNIFORM = "uniform"
    WEIGHTED_FUJIWARA = "fujiwara"
    WEIGHTED_COTANGENT = "cotangent"
    MAYER = "mayer"
    DESBRUN_FLOW = "desbrun"
    XU_GREEN = "xu"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                "unknown operator %r (expected one of %s)"
                % (value, ", ".join(k.value for k in cls))
            ) from None


@dataclass
class LtlOptions:
    """Stencil size and ring-extension limit for the lifting operator."""

    neighbor_count: int = 5
    max_ring: int = 3

    def __post_init__(self):
        if self.neighbor_count < 5:
            raise ValueError("neighbor_count must be >= 5")
        if not 1 <= self.max_ring <= 3:
            raise ValueError("max_ring must be between 1 and 3")


@dataclass
class OperatorField:
    """Per-vertex operator output.

    ``values`` is (nv,) for scalar operators or (nv, 3) for the
    mean-curvature vector; entries are NaN at boundary vertices and at
    vertices whose solve failed, with the failure kinds listed in
    ``failures`` as (vertex, kind) pairs.
    """

    values: np.ndarray
    failures: list

    @property
    def defined(self):
        v = self.values
        return ~np.isnan(v if v.ndim == 1 else v[:, 0])


@dataclass
class LtlStencils:
    """Solved lifting stencils for the interior vertices of one mesh."""

    n_vertices: int
    vertex_ids: np.ndarray
    neighbor_ids: np.ndarray
    alphas: np.ndarray
    denominators: np.ndarray
    failures: list


# -- worker pool -------------------------------------------------------------


def _worker_count():
    raw = os.environ.get("LTL_THREADS", "").strip()
    if not raw:
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise ValueError("LTL_THREADS must be an integer") from None
    if k < 0:
        raise ValueError("LTL_THREADS must be >= 0")
    if k == 0:
        return os.cpu_count() or 1
    return k


def _for_each(items, fn):
    workers = _worker_count()
    if workers <= 1 or len(items) < 64:
        for item in items:
            fn(item)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, items))


# -- LTL stencil construction --------------------------------------------------


def _as_field(mesh, h):
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (mesh.n_vertices,):
        raise ValueError(
            "field must supply one value per vertex (expected %d, got %s)"
            % (mesh.n_vertices, h.shape)
        )
    if not np.all(np.isfinite(h)):
        raise ValueError("field has a missing (non-finite) value")
    return h


def _quality(sol, pts):
    return sol.denominator / float(np.mean(pts[:, 0] ** 2 + pts[:, 1] ** 2))


def _stencil_for_vertex(mesh, v, frame, opts):
    """Ring-extension loop: lift, select, solve. Returns (ids, alpha, D) or kind.

    The closest-point solve is accepted immediately when its denominator is a
    healthy fraction of the stencil scale. Weak or degenerate stencils extend
    the ring and retry, additionally attempting the max-denominator solve
    over a wider point set; the best solution found anywhere is used if no
    attempt reaches the quality bar.
    """
    last_kind = "too-few-neighbors"
    best = None
    best_q = -1.0
    for depth in range(1, opts.max_ring + 1):
        poly = lift_one_ring(mesh, v, frame, depth)
        if len(poly.neighbor_ids) < opts.neighbor_count:
            continue
        keep = _select_closest(poly.coords, poly.neighbor_ids, opts.neighbor_count)
        pts = poly.coords[keep]
        ids = poly.neighbor_ids[keep]
        try:
            sol = solve_configuration(PointSet2D(pts, ids))
            q = _quality(sol, pts)
            if q >= STENCIL_QUALITY_MIN:
                return (sol.selected, sol.alphas, sol.denominator), None
            if q > best_q:
                best, best_q = (sol.selected, sol.alphas, sol.denominator), q
        except ZeroDenominator:
            last_kind = "zero-denominator"
        except (DegenerateConfiguration, ValueError):
            last_kind = "degenerate-configuration"

        wide = min(len(poly.neighbor_ids), max(10, opts.neighbor_count))
        if wide > opts.neighbor_count:
            keep = _select_closest(poly.coords, poly.neighbor_ids, wide)
            try:
                sol = solve_max_denominator(
                    PointSet2D(poly.coords[keep], poly.neighbor_ids[keep])
                )
                q = _quality(sol, poly.coords[keep])
                if q >= STENCIL_QUALITY_MIN:
                    return (sol.selected, sol.alphas, sol.denominator), None
                if q > best_q:
                    best, best_q = (sol.selected, sol.alphas, sol.denominator), q
            except ZeroDenominator:
                last_kind = "zero-denominator"
            except (DegenerateConfiguration, ValueError):
                last_kind = "degenerate-configuration"
    if best is not None:
        return best, None
    return None, last_kind


def _batch_ring1(mesh, interior_ok, normals, e1s, e2s):
    """Vectorized ring-1 pass for vertices with at least five neighbors.

    Returns (vertex_ids, neighbor_ids, alphas, denominators, retry) where
    ``retry`` lists candidate vertices the batch could not settle (they go
    through the ring-extension fallback).
    """
    indptr, indices = mesh.adjacency_csr()
    deg = np.diff(indptr)
    cand = interior_ok & (deg >= 5)
    if not cand.any():
        return (
            np.zeros(0, np.int64),
            np.zeros((0, 5), np.int64),
            np.zeros((0, 5)),
            np.zeros(0),
            np.nonzero(interior_ok & (deg < 5))[0].tolist(),
        )

    src = np.repeat(np.arange(mesh.n_vertices), deg)
    take_rows = cand[src]
    src = src[take_rows]
    dst = indices[take_rows]
    d = mesh.vertices[dst] - mesh.vertices[src]
    x = np.einsum("ij,ij->i", d, e1s[src])
    y = np.einsum("ij,ij->i", d, e2s[src])
    r2 = x * x + y * y

    order = np.lexsort((dst, r2, src))
    src_o = src[order]
    deg_c = deg[cand]
    starts = np.concatenate([[0], np.cumsum(deg_c)])[:-1]
    pos = np.arange(len(src_o)) - np.repeat(starts, deg_c)
    take = pos < 5

    vids = src_o[take][::5]
    nbrs = dst[order][take].reshape(-1, 5)
    xs = x[order][take].reshape(-1, 5)
    ys = y[order][take].reshape(-1, 5)

    alphas, denoms, ok, _kinds = solve_many(xs, ys)
    ok &= denoms >= STENCIL_QUALITY_MIN * (xs * xs + ys * ys).mean(axis=1)
    retry = vids[~ok].tolist() + np.nonzero(interior_ok & (deg < 5))[0].tolist()
    return vids[ok], nbrs[ok], alphas[ok], denoms[ok], retry


def ltl_stencils(mesh, opts=None, frame_provider=None):
    """Build the tangential-lifting stencil (ids, weights, denominator) per
    interior vertex.

    Boundary vertices are skipped. For each interior vertex the one-ring is
    lifted into the tangent frame; if it holds fewer than
    ``opts.neighbor_count`` points, or the solve degenerates, the ring is
    extended up to ``opts.max_ring`` before the vertex is recorded as failed.
    ``frame_provider(mesh, v) -> TangentFrame`` overrides the default frame,
    which forces the per-vertex path (used for basis-invariance checks).
    """
    opts = opts or LtlOptions()
    nv = mesh.n_vertices
    interior = ~mesh.boundary_vertex_mask
    failures = []

    if frame_provider is None:
        normals, e1s, e2s, frame_fail = tangent_frames(mesh)
        frame_ok = ~np.isnan(normals[:, 0])
        for vtx, kind in frame_fail:
            if interior[vtx]:
                failures.append((vtx, kind))
        candidates = interior & frame_ok
        if opts.neighbor_count == 5:
            vids, nbrs, alphas, denoms, retry = _batch_ring1(
                mesh, candidates, normals, e1s, e2s
            )
        else:
            vids = np.zeros(0, np.int64)
            nbrs = np.zeros((0, opts.neighbor_count), np.int64)
            alphas = np.zeros((0, opts.neighbor_count))
            denoms = np.zeros(0)
            retry = np.nonzero(candidates)[0].tolist()

        def frame_at(v):
            return TangentFrameView(normals[v], e1s[v], e2s[v])
    else:
        vids = np.zeros(0, np.int64)
        nbrs = np.zeros((0, opts.neighbor_count), np.int64)
        alphas = np.zeros((0, opts.neighbor_count))
        denoms = np.zeros(0)
        retry = np.nonzero(interior)[0].tolist()

        def frame_at(v):
            return frame_provider(mesh, v)

    extra = {}

    def solve_one(v):
        try:
            frame = frame_at(v)
        except DegenerateFace:
            extra[v] = (None, "degenerate-face")
            return
        except ValueError:
            extra[v] = (None, "zero-normal")
            return
        extra[v] = _stencil_for_vertex(mesh, v, frame, opts)

    _for_each(retry, solve_one)

    # rescued stencils can be wider than neighbor_count: pad narrow rows with
    # the center vertex and a zero weight, which contributes nothing
    width = max(
        [nbrs.shape[1]] + [len(res[0]) for res, _ in extra.values() if res is not None]
    )

    def padded(ids, alpha, centers):
        k = width - ids.shape[1]
        if k == 0:
            return ids, alpha
        fill = np.repeat(np.atleast_1d(centers)[:, None], k, axis=1)
        return (
            np.concatenate([ids, fill], axis=1),
            np.pad(alpha, ((0, 0), (0, k))),
        )

    nbrs, alphas = padded(nbrs.reshape(-1, nbrs.shape[1]), alphas, vids)
    rows_v, rows_n, rows_a, rows_d = [vids], [nbrs], [alphas], [denoms]
    for v in sorted(extra):
        result, kind = extra[v]
        if result is None:
            failures.append((int(v), kind))
        else:
            ids, alpha, denom = result
            ids, alpha = padded(ids[None, :], alpha[None, :], [v])
            rows_v.append(np.array([v], np.int64))
            rows_n.append(ids.astype(np.int64))
            rows_a.append(alpha)
            rows_d.append(np.array([denom]))

    vertex_ids = np.concatenate(rows_v)
    order = np.argsort(vertex_ids)
    return LtlStencils(
        n_vertices=nv,
        vertex_ids=vertex_ids[order],
        neighbor_ids=np.concatenate(rows_n)[order],
        alphas=np.concatenate(rows_a)[order],
        denominators=np.concatenate(rows_d)[order],
        failures=sorted(failures),
    )


@dataclass(frozen=True)
class TangentFrameView:
    normal: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


def apply_stencils(stencils, fields):
    """Evaluate the stencils on stacked fields of shape (k, nv)."""
    fields = np.atleast_2d(np.asarray(fields, dtype=np.float64))
    out = np.full((fields.shape[0], stencils.n_vertices), np.nan)
    if stencils.vertex_ids.size:
        nb = fields[:, stencils.neighbor_ids]
        ctr = fields[:, stencils.vertex_ids]
        acc = ((nb - ctr[:, :, None]) * stencils.alphas[None]).sum(axis=2)
        out[:, stencils.vertex_ids] = 4.0 * acc / stencils.denominators[None]
    return out


def lb_ltl(mesh, h, opts=None, frame_provider=None):
    """Tangential-lifting discrete Laplacian of a per-vertex field.

    Interior vertices get 4 sum alpha_i (h(v_i) - h(v)) / sum alpha_i r_i^2
    over the five lifted points closest to the origin; boundary vertices stay
    undefined and per-vertex failures are recorded.
    """
    h = _as_field(mesh, h)
    st = ltl_stencils(mesh, opts, frame_provider)
    values = apply_stencils(st, h[None, :])[0]
    return OperatorField(values=values, failures=st.failures)


def mean_curvature_vector(mesh, opts=None):
    """Lifting Laplacian of the three coordinate functions, stacked.

    On a surface mesh this approximates the mean-curvature vector 2 H n with
    the inward orientation (a unit sphere yields about -2 p).
    """
    st = ltl_stencils(mesh, opts)
    vals = apply_stencils(st, mesh.vertices.T)
    return OperatorField(values=vals.T.copy(), failures=st.failures)


# -- baseline operators --------------------------------------------------------


def _face_areas(mesh):
    tri = mesh.vertices[mesh.faces]
    cr = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return 0.5 * np.linalg.norm(cr, axis=1)


def _cot_at(apex, p, q):
    u = p - apex
    w = q - apex
    cr = np.linalg.norm(np.cross(u, w))
    nu = np.linalg.norm(u)
    nw = np.linalg.norm(w)
    if cr <= _SIN_TOL * nu * nw:
        return None
    return float(u @ w) / cr


def _cot_weights(mesh, ring):
    """cot(alpha_i) + cot(beta_i) per ring neighbor (cyclic rings only)."""
    pv = mesh.vertices[ring.center]
    pts = mesh.vertices[ring.neighbors]
    k = len(ring.neighbors)
    weights = np.empty(k)
    for i in range(k):
        c1 = _cot_at(pts[i - 1], pv, pts[i])
        c2 = _cot_at(pts[(i + 1) % k], pv, pts[i])
        if c1 is None or c2 is None:
            return None
        weights[i] = c1 + c2
    return weights


def _interior_vertices(mesh):
    return np.nonzero(~mesh.boundary_vertex_mask)[0]


def lb_weighted(mesh, h, scheme):
    """Normalized-weight difference schemes: uniform, fujiwara, or cotangent.

    Computes sum w_i (h(v_i) - h(v)) with the weights normalized to one.
    These schemes shrink toward zero under refinement, so they cannot
    converge to the true operator; they exist as comparison baselines.
    """
    if scheme not in ("uniform", "fujiwara", "cotangent"):
        raise ValueError("unknown weighted scheme %r" % (scheme,))
    h = _as_field(mesh, h)
    values = np.full(mesh.n_vertices, np.nan)
    failures = []

    def eval_vertex(v):
        nbrs = mesh.neighbors(v)
        diffs = h[nbrs] - h[v]
        if scheme == "uniform":
            values[v] = diffs.mean()
            return
        if scheme == "fujiwara":
            d = np.linalg.norm(mesh.vertices[nbrs] - mesh.vertices[v], axis=1)
            if np.any(d == 0.0):
                failures.append((int(v), "zero-length-edge"))
                return
            w = 1.0 / d
            values[v] = (w @ diffs) / w.sum()
            return
        ring = one_ring(mesh, v)
        w = _cot_weights(mesh, ring)
        if w is None:
            failures.append((int(v), "degenerate-angle"))
            return
        total = w.sum()
        if abs(total) <= 1e-14 * np.abs(w).sum():
            failures.append((int(v), "zero-weight-sum"))
            return
        values[v] = (w @ (h[ring.neighbors] - h[v])) / total

    _for_each(_interior_vertices(mesh), eval_vertex)
    return OperatorField(values=values, failures=sorted(failures))


def lb_mayer(mesh, h):
    """Disk-integral scheme: edge coefficients from the two shared neighbors,
    scaled by the inverse one-ring area."""
    h = _as_field(mesh, h)
    areas = _face_areas(mesh)
    values = np.full(mesh.n_vertices, np.nan)
    failures = []

    def eval_vertex(v):
        ring = one_ring(mesh, v)
        pv = mesh.vertices[v]
        pts = mesh.vertices[ring.neighbors]
        k = len(ring.neighbors)
        area = areas[ring.incident_faces].sum()
        total = 0.0
        for i in range(k):
            d = np.linalg.norm(pts[i] - pv)
            if d == 0.0:
                failures.append((int(v), "zero-length-edge"))
                return
            lk = np.linalg.norm(pts[i - 1] - pts[i])
            lm = np.linalg.norm(pts[(i + 1) % k] - pts[i])
            total += (lk + lm) / (2.0 * d) * (h[ring.neighbors[i]] - h[v])
        values[v] = total / area

    _for_each(_interior_vertices(mesh), eval_vertex)
    return OperatorField(values=values, failures=sorted(failures))


def lb_desbrun(mesh, h):
    """Curvature-flow scheme: cotangent pairs over twice the value difference,
    scaled by 3 / (one-ring area). Differences are signed."""
    h = _as_field(mesh, h)
    areas = _face_areas(mesh)
    values = np.full(mesh.n_vertices, np.nan)
    failures = []

    def eval_vertex(v):
        ring = one_ring(mesh, v)
        w = _cot_weights(mesh, ring)
        if w is None:
            failures.append((int(v), "degenerate-angle"))
            return
        area = areas[ring.incident_faces].sum()
        values[v] = 3.0 / area * float((w / 2.0) @ (h[ring.neighbors] - h[v]))

    _for_each(_interior_vertices(mesh), eval_vertex)
    return OperatorField(values=values, failures=sorted(failures))


def gradient_ltl(mesh, h, v, opts=None, frame=None):
    """Tangential gradient from a constrained quadratic fit.

    Lifts the ring of ``v`` (extending it until at least five samples are
    available), fits f0 + a x + b y + c x^2 + d x y + e y^2 through the
    center value by least squares, and maps (a, b) back through the frame.
    """
    opts = opts or LtlOptions()
    h = _as_field(mesh, h)
    if frame is None:
        frame = tangent_frame(mesh, v)
    for depth in range(1, opts.max_ring + 1):
        poly = lift_one_ring(mesh, v, frame, depth)
        if len(poly.neighbor_ids) < 5:
            continue
        x = poly.coords[:, 0]
        y = poly.coords[:, 1]
        design = np.column_stack([x, y, x * x, x * y, y * y])
        rhs = h[poly.neighbor_ids] - h[v]
        coef, _res, rank, _sv = np.linalg.lstsq(design, rhs, rcond=None)
        if rank < 5:
            continue
        return coef[0] * frame.e1 + coef[1] * frame.e2
    raise DegenerateConfiguration("rank-deficient gradient fit at vertex %d" % v)


def _all_gradients(mesh, h, opts):
    """Quadratic-fit gradients at every vertex; NaN rows where the fit fails."""
    opts = opts or LtlOptions()
    normals, e1s, e2s, frame_fail = tangent_frames(mesh)
    grads = np.full((mesh.n_vertices, 3), np.nan)
    bad = {v for v, _ in frame_fail}

    def eval_vertex(v):
        if v in bad:
            return
        frame = TangentFrameView(normals[v], e1s[v], e2s[v])
        try:
            grads[v] = gradient_ltl(mesh, h, v, opts, frame=frame)
        except DegenerateConfiguration:
            pass

    _for_each(range(mesh.n_vertices), eval_vertex)
    return grads


def lb_xu_green(mesh, h, opts=None):
    """Green-formula scheme: flux of the fitted gradients through the one-ring
    boundary, divided by twice the ring area.

    Each ring edge contributes <g(v_i) + g(v_i+), nu_i> |v_i+ - v_i| with
    nu_i the in-face outward unit normal of the opposite edge; gradients come
    from the quadratic fit. A failed gradient at any needed vertex fails the
    whole vertex.
    """
    h = _as_field(mesh, h)
    opts = opts or LtlOptions()
    areas = _face_areas(mesh)
    grads = _all_gradients(mesh, h, opts)
    values = np.full(mesh.n_vertices, np.nan)
    failures = []

    def eval_vertex(v):
        ring = one_ring(mesh, v)
        needed = np.concatenate([[v], ring.neighbors])
        if np.any(np.isnan(grads[needed, 0])):
            failures.append((int(v), "gradient-failure"))
            return
        pv = mesh.vertices[v]
        pts = mesh.vertices[ring.neighbors]
        k = len(ring.neighbors)
        area = areas[ring.incident_faces].sum()
        total = 0.0
        for i in range(k):
            j = (i + 1) % k
            edge = pts[j] - pts[i]
            elen = np.linalg.norm(edge)
            face_n = np.cross(pts[i] - pv, pts[j] - pv)
            nu = np.cross(edge, face_n)
            nn = np.linalg.norm(nu)
            if elen == 0.0 or nn == 0.0:
                failures.append((int(v), "degenerate-face"))
                return
            nu /= nn
            if nu @ (0.5 * (pts[i] + pts[j]) - pv) < 0.0:
                nu = -nu
            gsum = grads[ring.neighbors[i]] + grads[ring.neighbors[j]]
            total += float(gsum @ nu) * elen
        values[v] = total / (2.0 * area)

    _for_each(_interior_vertices(mesh), eval_vertex)
    return OperatorField(values=values, failures=sorted(failures))


# -- dispatch -------------------------------------------------------------------


def apply_operator(kind, mesh, h, opts=None):
    """Evaluate any operator kind on a scalar per-vertex field."""
    kind = OperatorKind.parse(kind)
    if kind is OperatorKind.LTL:
        return lb_ltl(mesh, h, opts)
    if kind in (
        OperatorKind.WEIGHTED_UNIFORM,
        OperatorKind.WEIGHTED_FUJIWARA,
        OperatorKind.WEIGHTED_COTANGENT,
    ):
        return lb_weighted(mesh, h, kind.value)
    if kind is OperatorKind.MAYER:
        return lb_mayer(mesh, h)
    if kind is OperatorKind.DESBRUN_FLOW:
        return lb_desbrun(mesh, h)
    return lb_xu_green(mesh, h, opts)


def coordinate_laplacians(kind, mesh, opts=None):
    """Operator applied to the coordinate functions, stacked as (nv, 3).

    For the lifting operator the stencil is shared across the three
    components (mean_curvature_vector); other kinds run per component.
    """
    kind = OperatorKind.parse(kind)
    if kind is OperatorKind.LTL:
        return mean_curvature_vector(mesh, opts)
    fields = [apply_operator(kind, mesh, mesh.vertices[:, i], opts) for i in range(3)]
    values = np.column_stack([f.values for f in fields])
    bad = np.isnan(values).any(axis=1)
    values[bad] = np.nan
    merged = sorted({(v, kind_) for f in fields for v, kind_ in f.failures})
    return OperatorField(values=values, failures=merged)
