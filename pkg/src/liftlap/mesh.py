"""Triangle mesh storage, OFF/OBJ I/O, planar generators, and ring queries."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import Delaunay

from .errors import MeshError


class DomainKind(Enum):
    """Planar triangulation families over the unit square."""

    THREE_DIRECTIONAL = "three"
    FOUR_DIRECTIONAL = "four"
    UNSTRUCTURED = "unstructured"

    @classmethod
    def parse(cls, value):
        """Accept a DomainKind, its value, or the short aliases a/b/c."""
        if isinstance(value, cls):
            return value
        aliases = {"a": "three", "b": "four", "c": "unstructured"}
        try:
            return cls(aliases.get(str(value).lower(), str(value).lower()))
        except ValueError:
            raise ValueError(
                "unknown domain kind %r (expected three/four/unstructured or a/b/c)"
                % (value,)
            ) from None


@dataclass(frozen=True)
class MeshStats:
    mesh_size_r: float
    n_vertices: int
    n_faces: int
    n_boundary_vertices: int


@dataclass
class OneRing:
    """Ordered neighborhood of one vertex.

    For an interior vertex ``neighbors`` is a closed cycle (successor order
    follows the CCW face orientation, starting at the smallest neighbor id)
    and ``incident_faces[i]`` is the face spanning neighbors i, i+1 (mod k).
    For a boundary vertex the neighbors form an open chain with one fewer
    incident face.
    """

    center: int
    neighbors: np.ndarray
    incident_faces: np.ndarray
    is_boundary: bool


class Mesh:
    """Indexed triangle mesh with CCW-oriented faces.

    Construction copies the inputs, validates the manifold-with-boundary
    invariants (valid indices, no repeated vertex inside a face, no duplicate
    faces, at most two faces per edge) and precomputes edge and adjacency
    tables. Instances are immutable afterwards, so read-only queries are safe
    to run concurrently.
    """

    def __init__(self, vertices, faces):
        v = np.array(vertices, dtype=np.float64)
        f = np.array(faces, dtype=np.int64)
        if v.size == 0:
            v = v.reshape(0, 3)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must form an (n, 3) array")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must form an (m, 3) array of index triples")
        if v.size and not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinate")
        self.vertices = v
        self.faces = f
        self._build_topology()
        v.setflags(write=False)
        f.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    def _build_topology(self):
        nv = len(self.vertices)
        f = self.faces
        if f.size:
            if f.min() < 0 or f.max() >= nv:
                raise MeshError("face references a vertex index out of range")
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise MeshError("face repeats a vertex")
            tri = np.sort(f, axis=1)
            if nv and nv ** 3 < 2 ** 62:
                codes = (tri[:, 0] * nv + tri[:, 1]) * nv + tri[:, 2]
                n_unique = np.unique(codes).size
            else:
                n_unique = np.unique(tri, axis=0).shape[0]
            if n_unique != len(tri):
                raise MeshError("two faces share the same vertex triple")

        halfedges = f[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2) if f.size else np.zeros((0, 2), np.int64)
        lo = np.minimum(halfedges[:, 0], halfedges[:, 1])
        hi = np.maximum(halfedges[:, 0], halfedges[:, 1])
        codes = lo * nv + hi if nv else lo
        uniq, counts = np.unique(codes, return_counts=True)
        if counts.size and counts.max() > 2:
            raise MeshError("non-manifold edge (more than two incident faces)")
        edges = np.column_stack([uniq // nv, uniq % nv]) if nv else np.zeros((0, 2), np.int64)
        self.edges = edges
        self._edge_codes = uniq
        self._boundary_edge_mask = counts == 1

        bmask = np.zeros(nv, dtype=bool)
        if edges.size:
            bmask[edges[self._boundary_edge_mask].ravel()] = True
        self._boundary_vertex_mask = bmask
        bmask.setflags(write=False)

        # vertex adjacency, CSR with neighbor ids sorted ascending
        both = np.concatenate([edges, edges[:, ::-1]]) if edges.size else np.zeros((0, 2), np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        self._adj_indices = both[order, 1]
        deg = np.bincount(both[:, 0], minlength=nv)
        self._adj_indptr = np.concatenate([[0], np.cumsum(deg)])

        # vertex -> incident faces, CSR sorted by face id
        fv = f.ravel()
        order = np.argsort(fv, kind="stable")
        self._vf_indices = order // 3
        vdeg = np.bincount(fv, minlength=nv)
        self._vf_indptr = np.concatenate([[0], np.cumsum(vdeg)])

    # -- queries ---------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def boundary_vertex_mask(self):
        return self._boundary_vertex_mask

    def neighbors(self, v):
        """Vertex ids adjacent to ``v``, sorted ascending."""
        return self._adj_indices[self._adj_indptr[v]:self._adj_indptr[v + 1]]

    def vertex_faces(self, v):
        """Face ids containing ``v``, sorted ascending."""
        return self._vf_indices[self._vf_indptr[v]:self._vf_indptr[v + 1]]

    def adjacency_csr(self):
        """(indptr, indices) of the vertex adjacency, neighbors ascending."""
        return self._adj_indptr, self._adj_indices


def one_ring(mesh, v):
    """Ordered one-ring of vertex ``v``.

    Neighbors follow the CCW orientation of the incident faces (seen from the
    outward side). ``is_boundary`` is set when the chain is open.
    """
    if not 0 <= v < mesh.n_vertices:
        raise MeshError("vertex index %d out of range" % v)
    fids = mesh.vertex_faces(v)
    if fids.size == 0:
        raise MeshError("vertex %d has no incident faces" % v)
    succ = {}
    face_of = {}
    for fi in fids:
        a, b, c = mesh.faces[fi]
        if a == v:
            p, q = b, c
        elif b == v:
            p, q = c, a
        else:
            p, q = a, b
        p, q = int(p), int(q)
        if p in succ:
            raise MeshError("non-manifold fan at vertex %d" % v)
        succ[p] = q
        face_of[p] = int(fi)

    has_pred = set(succ.values())
    starts = [p for p in succ if p not in has_pred]
    if not starts:
        is_boundary = False
        start = min(succ)
    elif len(starts) == 1:
        is_boundary = True
        start = starts[0]
    else:
        raise MeshError("non-manifold fan at vertex %d" % v)

    chain = [start]
    faces_out = []
    cur = start
    while cur in succ:
        faces_out.append(face_of[cur])
        cur = succ[cur]
        if cur == start:
            break
        if len(chain) > len(succ):
            raise MeshError("non-manifold fan at vertex %d" % v)
        chain.append(cur)
    if len(faces_out) != len(fids):
        raise MeshError("non-manifold fan at vertex %d" % v)

    return OneRing(
        center=int(v),
        neighbors=np.asarray(chain, dtype=np.int64),
        incident_faces=np.asarray(faces_out, dtype=np.int64),
        is_boundary=is_boundary,
    )


def mesh_stats(mesh):
    """Max edge length plus vertex/face/boundary counts."""
    if mesh.n_vertices == 0 or mesh.n_faces == 0:
        raise MeshError("empty mesh")
    d = mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]]
    r = float(np.sqrt((d * d).sum(axis=1).max()))
    return MeshStats(
        mesh_size_r=r,
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        n_boundary_vertices=int(mesh.boundary_vertex_mask.sum()),
    )


# -- generators ------------------------------------------------------------


def generate_planar(kind, n, seed=0):
    """Triangulate the unit square with z = 0.

    Parameters
    ----------
    kind : DomainKind | str
        three: n x n cells, every cell split by the same (lower-left to
        upper-right) diagonal. four: n x n cells, every cell split into four
        triangles through its center point. unstructured: Delaunay
        triangulation of a jittered (n+1) x (n+1) grid, jitter amplitude
        0.25 * cell size, corners fixed and edge points jittered only along
        their boundary edge. Fully deterministic in ``seed``.
    n : int
        Cells per side, at least 1.
    """
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    kind = DomainKind.parse(kind)
    if kind is DomainKind.THREE_DIRECTIONAL:
        return _planar_three(n)
    if kind is DomainKind.FOUR_DIRECTIONAL:
        return _planar_four(n)
    return _planar_unstructured(n, seed)


def _grid_vertices(n):
    ax = np.arange(n + 1) / n
    xx, yy = np.meshgrid(ax, ax)
    return np.column_stack([xx.ravel(), yy.ravel(), np.zeros((n + 1) ** 2)])


def _planar_three(n):
    verts = _grid_vertices(n)
    g = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a = g[:-1, :-1].ravel()
    b = g[:-1, 1:].ravel()
    c = g[1:, 1:].ravel()
    d = g[1:, :-1].ravel()
    faces = np.empty((2 * n * n, 3), dtype=np.int64)
    faces[0::2] = np.column_stack([a, b, c])
    faces[1::2] = np.column_stack([a, c, d])
    return Mesh(verts, faces)


def _planar_four(n):
    corners = _grid_vertices(n)
    ax = (np.arange(n) + 0.5) / n
    cx, cy = np.meshgrid(ax, ax)
    centers = np.column_stack([cx.ravel(), cy.ravel(), np.zeros(n * n)])
    verts = np.vstack([corners, centers])
    g = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    ctr = (n + 1) ** 2 + np.arange(n * n)
    a = g[:-1, :-1].ravel()
    b = g[:-1, 1:].ravel()
    c = g[1:, 1:].ravel()
    d = g[1:, :-1].ravel()
    faces = np.empty((4 * n * n, 3), dtype=np.int64)
    faces[0::4] = np.column_stack([a, b, ctr])
    faces[1::4] = np.column_stack([b, c, ctr])
    faces[2::4] = np.column_stack([c, d, ctr])
    faces[3::4] = np.column_stack([d, a, ctr])
    return Mesh(verts, faces)


def _planar_unstructured(n, seed):
    rng = np.random.default_rng(seed)
    ax = np.arange(n + 1) / n
    xx, yy = np.meshgrid(ax, ax)
    jitter = rng.uniform(-0.25 / n, 0.25 / n, size=(n + 1, n + 1, 2))
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    # points on the left/right edge may only slide along y, top/bottom along x
    x_ok = (ii > 0) & (ii < n)
    y_ok = (jj > 0) & (jj < n)
    pts = np.column_stack([
        (xx + np.where(x_ok, jitter[..., 0], 0.0)).ravel(),
        (yy + np.where(y_ok, jitter[..., 1], 0.0)).ravel(),
    ])
    tri = Delaunay(pts)
    faces = np.asarray(tri.simplices, dtype=np.int64)
    p = pts[faces]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = signed < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    verts = np.column_stack([pts, np.zeros(len(pts))])
    return Mesh(verts, faces)


def subdivide_midpoint(mesh):
    """Split every face into four through the edge midpoints.

    Shared edges produce shared midpoint vertices; the original vertices keep
    their indices and positions.
    """
    nv = mesh.n_vertices
    edges = mesh.edges
    codes = mesh._edge_codes
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    f = mesh.faces

    def midpoint_index(u, w):
        lo = np.minimum(u, w)
        hi = np.maximum(u, w)
        return nv + np.searchsorted(codes, lo * nv + hi)

    m01 = midpoint_index(f[:, 0], f[:, 1])
    m12 = midpoint_index(f[:, 1], f[:, 2])
    m20 = midpoint_index(f[:, 2], f[:, 0])
    faces = np.empty((4 * len(f), 3), dtype=np.int64)
    faces[0::4] = np.column_stack([f[:, 0], m01, m20])
    faces[1::4] = np.column_stack([m01, f[:, 1], m12])
    faces[2::4] = np.column_stack([m20, m12, f[:, 2]])
    faces[3::4] = np.column_stack([m01, m12, m20])
    return Mesh(np.vstack([mesh.vertices, mids]), faces)


def icosahedron():
    """Regular unit icosahedron, outward CCW faces."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    p = verts[faces]
    outward = np.einsum(
        "ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p.mean(axis=1)
    )
    flip = outward < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return Mesh(verts, faces)


def icosphere(subdivisions):
    """Unit sphere mesh: icosahedron subdivided and reprojected each level."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    mesh = icosahedron()
    for _ in range(subdivisions):
        mesh = subdivide_midpoint(mesh)
        verts = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
        mesh = Mesh(verts, mesh.faces)
    return mesh


# -- file formats ------------------------------------------------------------


def load_mesh(text, fmt="off"):
    """Parse OFF or the v/f OBJ subset into a Mesh.

    Raises MeshError with a line number on malformed input, on non-triangle
    faces, and (via Mesh validation) on dangling indices or non-manifold
    edges.
    """
    fmt = fmt.lower()
    if fmt == "off":
        return _parse_off(text)
    if fmt == "obj":
        return _parse_obj(text)
    raise ValueError("unknown mesh format %r (expected 'off' or 'obj')" % (fmt,))


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_off(text):
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshError("line 1: empty OFF file") from None
    if header != "OFF":
        raise MeshError("line %d: expected OFF header" % lineno)
    try:
        lineno, counts = next(lines)
    except StopIteration:
        raise MeshError("line %d: missing OFF counts line" % (lineno + 1)) from None
    parts = counts.split()
    if len(parts) != 3:
        raise MeshError("line %d: expected 'nv nf ne' counts" % lineno)
    try:
        nv, nf = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshError("line %d: non-integer OFF counts" % lineno) from None

    verts = np.empty((nv, 3), dtype=np.float64)
    for i in range(nv):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshError("unexpected end of file after %d of %d vertices" % (i, nv)) from None
        parts = line.split()
        if len(parts) != 3:
            raise MeshError("line %d: expected 3 vertex coordinates" % lineno)
        try:
            verts[i] = [float(p) for p in parts]
        except ValueError:
            raise MeshError("line %d: bad vertex coordinate" % lineno) from None

    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise MeshError("unexpected end of file after %d of %d faces" % (i, nf)) from None
        parts = line.split()
        try:
            k = int(parts[0])
        except ValueError:
            raise MeshError("line %d: bad face record" % lineno) from None
        if k != 3:
            raise MeshError("line %d: non-triangle face (%d vertices)" % (lineno, k))
        if len(parts) < 4:
            raise MeshError("line %d: face record too short" % lineno)
        try:
            idx = [int(p) for p in parts[1:4]]
        except ValueError:
            raise MeshError("line %d: bad face index" % lineno) from None
        for j in idx:
            if not 0 <= j < nv:
                raise MeshError("line %d: vertex index %d out of range" % (lineno, j))
        faces[i] = idx
    return Mesh(verts, faces)


def _parse_obj(text):
    verts = []
    faces = []
    for lineno, line in _content_lines(text):
        parts = line.split()
        key = parts[0]
        if key == "v":
            if len(parts) != 4:
                raise MeshError("line %d: expected 'v x y z'" % lineno)
            try:
                verts.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise MeshError("line %d: bad vertex coordinate" % lineno) from None
        elif key == "f":
            refs = parts[1:]
            if len(refs) != 3:
                raise MeshError(
                    "line %d: non-triangle face (%d vertices)" % (lineno, len(refs))
                )
            idx = []
            for ref in refs:
                token = ref.split("/", 1)[0]
                try:
                    j = int(token)
                except ValueError:
                    raise MeshError("line %d: bad face index %r" % (lineno, ref)) from None
                if not 1 <= j <= len(verts):
                    raise MeshError("line %d: vertex index %d out of range" % (lineno, j))
                idx.append(j - 1)
            faces.append(idx)
        else:
            raise MeshError("line %d: unsupported record %r" % (lineno, key))
    return Mesh(np.asarray(verts, dtype=np.float64).reshape(-1, 3),
                np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def save_off(mesh):
    """Serialize to ASCII OFF with 17 significant digits."""
    out = ["OFF", "%d %d %d" % (mesh.n_vertices, mesh.n_faces, mesh.n_edges)]
    for x, y, z in mesh.vertices:
        out.append("%.17g %.17g %.17g" % (x, y, z))
    for i, j, k in mesh.faces:
        out.append("3 %d %d %d" % (i, j, k))
    return "\n".join(out) + "\n"


def save_obj(mesh):
    """Serialize to the v/f OBJ subset with 17 significant digits."""
    out = []
    for x, y, z in mesh.vertices:
        out.append("v %.17g %.17g %.17g" % (x, y, z))
    for i, j, k in mesh.faces:
        out.append("f %d %d %d" % (i + 1, j + 1, k + 1))
    return "\n".join(out) + "\n"
