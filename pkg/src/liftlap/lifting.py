"""Vertex normals, tangent frames, and lifting of rings into the tangent plane."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFace, MeshError

# a triangle counts as degenerate when its area is this small relative to the
# product of two edge lengths
_DEGENERATE_AREA_REL = 1e-14
_ZERO_NORMAL_REL = 1e-12


@dataclass(frozen=True)
class TangentFrame:
    """Unit normal plus an orthonormal in-plane basis (e1, e2)."""

    normal: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


@dataclass
class LiftedPolygon:
    """2D image of a vertex neighborhood in its tangent plane.

    ``coords[i]`` is the (e1, e2) projection of neighbor i relative to the
    center; entries are sorted by distance to the origin, ties by vertex id.
    ``lifted_values`` / ``center_value`` are populated by lift_function and
    copy the per-vertex samples unchanged.
    """

    center: int
    neighbor_ids: np.ndarray
    coords: np.ndarray
    lifted_values: np.ndarray | None = None
    center_value: float | None = None


def _face_unit_normal(p0, p1, p2):
    u = p1 - p0
    w = p2 - p0
    cr = np.cross(u, w)
    area2 = np.linalg.norm(cr)
    if area2 <= _DEGENERATE_AREA_REL * np.linalg.norm(u) * np.linalg.norm(w):
        raise DegenerateFace("zero-area triangle")
    return cr / area2


def vertex_normal(mesh, v):
    """Centroid-weighted average of incident face normals, unit length.

    Face weights are 1 / |G_T - v|^2 with G_T the face centroid. Boundary
    vertices use their partial fan.
    """
    fids = mesh.vertex_faces(v)
    if fids.size == 0:
        raise MeshError("vertex %d has no incident faces" % v)
    p = mesh.vertices[v]
    acc = np.zeros(3)
    wsum = 0.0
    for fi in fids:
        tri = mesh.vertices[mesh.faces[fi]]
        try:
            n = _face_unit_normal(tri[0], tri[1], tri[2])
        except DegenerateFace:
            raise DegenerateFace("zero-area triangle %d at vertex %d" % (fi, v)) from None
        g = tri.mean(axis=0) - p
        w = 1.0 / (g @ g)
        acc += w * n
        wsum += w
    norm = np.linalg.norm(acc)
    if norm <= _ZERO_NORMAL_REL * wsum:
        raise ValueError("weighted face normals cancel at vertex %d" % v)
    return acc / norm


def frame_from_normal(normal):
    """Deterministic orthonormal basis for the plane orthogonal to ``normal``.

    e1 is the normalized tangential projection of the global axis least
    aligned with the normal, e2 = normal x e1.
    """
    n = np.asarray(normal, dtype=np.float64)
    k = int(np.argmin(np.abs(n)))
    axis = np.zeros(3)
    axis[k] = 1.0
    e1 = axis - n[k] * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    e2 /= np.linalg.norm(e2)
    return TangentFrame(normal=n, e1=e1, e2=e2)


def tangent_frame(mesh, v):
    """TangentFrame at vertex ``v`` from the centroid-weighted normal."""
    return frame_from_normal(vertex_normal(mesh, v))


def vertex_normals(mesh):
    """Centroid-weighted normals for every vertex at once.

    Returns (normals, failures) where failed rows are NaN and failures lists
    (vertex, kind) with kind in {"degenerate-face", "zero-normal"}.
    """
    nv = mesh.n_vertices
    f = mesh.faces
    tri = mesh.vertices[f]
    u = tri[:, 1] - tri[:, 0]
    w = tri[:, 2] - tri[:, 0]
    cr = np.cross(u, w)
    area2 = np.linalg.norm(cr, axis=1)
    scale = np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
    bad_face = area2 <= _DEGENERATE_AREA_REL * scale
    safe = np.where(bad_face, 1.0, area2)
    unit = cr / safe[:, None]
    centroid = tri.mean(axis=1)

    acc = np.zeros((nv, 3))
    wsum = np.zeros(nv)
    for corner in range(3):
        d = centroid - tri[:, corner]
        weight = 1.0 / np.einsum("ij,ij->i", d, d)
        weight = np.where(bad_face, 0.0, weight)
        np.add.at(acc, f[:, corner], weight[:, None] * unit)
        np.add.at(wsum, f[:, corner], weight)

    bad_vertex = np.zeros(nv, dtype=bool)
    if bad_face.any():
        bad_vertex[np.unique(f[bad_face])] = True

    norm = np.linalg.norm(acc, axis=1)
    zero = (~bad_vertex) & (norm <= _ZERO_NORMAL_REL * wsum)
    failures = [(int(v), "degenerate-face") for v in np.nonzero(bad_vertex)[0]]
    failures += [(int(v), "zero-normal") for v in np.nonzero(zero)[0]]
    ok = ~(bad_vertex | zero) & (wsum > 0)
    normals = np.full((nv, 3), np.nan)
    normals[ok] = acc[ok] / norm[ok, None]
    return normals, failures


def tangent_frames(mesh):
    """Batched frames for every vertex.

    Returns (normals, e1s, e2s, failures); rows of failed vertices are NaN.
    """
    normals, failures = vertex_normals(mesh)
    ok = ~np.isnan(normals[:, 0])
    n = normals
    e1 = np.full_like(n, np.nan)
    e2 = np.full_like(n, np.nan)
    if ok.any():
        sub = n[ok]
        k = np.argmin(np.abs(sub), axis=1)
        axis = np.zeros_like(sub)
        axis[np.arange(len(sub)), k] = 1.0
        t = axis - sub * sub[np.arange(len(sub)), k][:, None]
        t /= np.linalg.norm(t, axis=1)[:, None]
        c = np.cross(sub, t)
        c /= np.linalg.norm(c, axis=1)[:, None]
        e1[ok] = t
        e2[ok] = c
    return normals, e1, e2, failures


def _ring_vertices(mesh, v, depth):
    """All vertices within graph distance ``depth`` of v, excluding v."""
    seen = {int(v)}
    frontier = [int(v)]
    out = []
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for w in mesh.neighbors(u):
                wi = int(w)
                if wi not in seen:
                    seen.add(wi)
                    nxt.append(wi)
        out.extend(nxt)
        frontier = nxt
        if not frontier:
            break
    return np.asarray(sorted(out), dtype=np.int64)


def lift_one_ring(mesh, v, frame, ring_depth=1):
    """Project the (extended) ring of ``v`` into the tangent plane.

    Collects every vertex within graph distance ``ring_depth``, projects each
    offset onto (e1, e2), and orders the result by lifted distance to the
    origin, ties by vertex id.
    """
    if ring_depth < 1:
        raise ValueError("ring_depth must be >= 1")
    ids = _ring_vertices(mesh, v, ring_depth)
    d = mesh.vertices[ids] - mesh.vertices[v]
    x = d @ frame.e1
    y = d @ frame.e2
    r2 = x * x + y * y
    order = np.lexsort((ids, r2))
    return LiftedPolygon(
        center=int(v),
        neighbor_ids=ids[order],
        coords=np.column_stack([x, y])[order],
    )


def lift_function(polygon, h):
    """Attach per-vertex samples of ``h`` to a lifted polygon (copy semantics)."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or len(h) <= polygon.neighbor_ids.max(initial=polygon.center):
        raise ValueError("field does not cover every lifted vertex")
    values = h[polygon.neighbor_ids]
    center_value = float(h[polygon.center])
    if not (np.all(np.isfinite(values)) and np.isfinite(center_value)):
        raise ValueError("field value missing at a lifted vertex")
    return dataclasses.replace(
        polygon, lifted_values=values, center_value=center_value
    )
