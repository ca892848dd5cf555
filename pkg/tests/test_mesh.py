import numpy as np
import pytest

from liftlap import (
    DomainKind,
    Mesh,
    MeshError,
    generate_planar,
    icosphere,
    load_mesh,
    mesh_stats,
    one_ring,
    save_obj,
    save_off,
    subdivide_midpoint,
)

SINGLE_TRIANGLE_OFF = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"


def canonical_faces(mesh):
    """Face set keyed by vertex position, independent of index order."""
    order = np.lexsort(mesh.vertices.T[::-1])
    rank = np.empty(len(order), dtype=int)
    rank[order] = np.arange(len(order))
    sorted_verts = mesh.vertices[order]
    faces = {tuple(sorted(rank[f])) for f in mesh.faces}
    return sorted_verts, faces


class TestLoadMesh:
    def test_single_triangle_off(self):
        mesh = load_mesh(SINGLE_TRIANGLE_OFF, "off")
        assert mesh.n_vertices == 3
        assert mesh.n_faces == 1
        assert np.allclose(mesh.vertices[1], [1, 0, 0])

    def test_obj_quad_face_rejected(self):
        text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        with pytest.raises(MeshError, match="non-triangle"):
            load_mesh(text, "obj")

    def test_off_non_triangle_rejected(self):
        text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
        with pytest.raises(MeshError, match="non-triangle"):
            load_mesh(text, "off")

    def test_octahedron_connectivity(self, octahedron):
        # hand enumeration: each vertex is adjacent to the four vertices not
        # on its own axis
        assert octahedron.n_vertices == 6
        assert octahedron.n_faces == 8
        expected = {
            0: {2, 3, 4, 5}, 1: {2, 3, 4, 5}, 2: {0, 1, 4, 5},
            3: {0, 1, 4, 5}, 4: {0, 1, 2, 3}, 5: {0, 1, 2, 3},
        }
        for v, nbrs in expected.items():
            ring = one_ring(octahedron, v)
            assert set(ring.neighbors.tolist()) == nbrs
            assert len(ring.neighbors) == 4
            assert not ring.is_boundary

    def test_parse_error_carries_line_number(self):
        with pytest.raises(MeshError, match="line 4"):
            load_mesh("OFF\n3 1 0\n0 0 0\noops oops\n0 1 0\n3 0 1 2\n", "off")

    def test_dangling_index(self):
        with pytest.raises(MeshError, match="out of range"):
            load_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n", "off")

    def test_non_manifold_edge_rejected(self):
        text = (
            "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 -1 0\n"
            "3 0 1 2\n3 0 1 3\n3 0 1 4\n"
        )
        with pytest.raises(MeshError, match="non-manifold"):
            load_mesh(text, "off")

    def test_obj_unknown_record_rejected(self):
        with pytest.raises(MeshError, match="unsupported record"):
            load_mesh("v 0 0 0\nvn 0 0 1\n", "obj")


class TestMeshValidation:
    def test_repeated_vertex_in_face(self):
        with pytest.raises(MeshError, match="repeats"):
            Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])

    def test_duplicate_face(self):
        with pytest.raises(MeshError, match="same vertex triple"):
            Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2], [2, 0, 1]])

    def test_vertices_read_only(self, flat_four_grid):
        with pytest.raises(ValueError):
            flat_four_grid.vertices[0, 0] = 7.0


class TestOneRing:
    def test_octahedron_apex_cycle(self, octahedron):
        ring = one_ring(octahedron, 4)
        # CCW seen from above: 0 -> 2 -> 1 -> 3
        assert ring.neighbors.tolist() == [0, 2, 1, 3]
        assert len(ring.incident_faces) == 4

    def test_single_triangle_ring(self):
        mesh = load_mesh(SINGLE_TRIANGLE_OFF, "off")
        ring = one_ring(mesh, 0)
        assert ring.is_boundary
        assert len(ring.neighbors) == 2

    def test_grid_corner_boundary(self):
        # corner (1, 0) of the single-diagonal grid touches one face only
        mesh = generate_planar("three", 1)
        ring = one_ring(mesh, 1)
        assert ring.is_boundary
        assert len(ring.neighbors) == 2

    def test_rotation_equivalence_under_face_shuffle(self, octahedron):
        rng = np.random.default_rng(5)
        perm = rng.permutation(octahedron.n_faces)
        shuffled = Mesh(octahedron.vertices, octahedron.faces[perm])
        for v in range(octahedron.n_vertices):
            a = one_ring(octahedron, v).neighbors.tolist()
            b = one_ring(shuffled, v).neighbors.tolist()
            k = b.index(a[0])
            assert a == b[k:] + b[:k]

    def test_invalid_index(self, octahedron):
        with pytest.raises(MeshError):
            one_ring(octahedron, 99)


class TestMeshStats:
    def test_unit_right_triangle(self):
        mesh = load_mesh(SINGLE_TRIANGLE_OFF, "off")
        assert mesh_stats(mesh).mesh_size_r == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_four_directional_n2(self):
        # independent enumeration over the faces' own edges
        mesh = generate_planar("four", 2)
        longest = 0.0
        for f in mesh.faces:
            p = mesh.vertices[f]
            for a, b in ((0, 1), (1, 2), (2, 0)):
                longest = max(longest, float(np.linalg.norm(p[a] - p[b])))
        st = mesh_stats(mesh)
        assert st.mesh_size_r == pytest.approx(longest, abs=1e-15)
        assert st.mesh_size_r == pytest.approx(0.5, abs=1e-15)

    def test_octahedron_edges_equal(self, octahedron):
        assert mesh_stats(octahedron).mesh_size_r == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_empty_mesh(self):
        with pytest.raises(MeshError, match="empty"):
            mesh_stats(Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)))


class TestGenerators:
    def test_three_n1_counts(self):
        mesh = generate_planar("three", 1)
        assert (mesh.n_vertices, mesh.n_faces) == (4, 2)

    def test_four_n1_counts(self):
        mesh = generate_planar("four", 1)
        assert (mesh.n_vertices, mesh.n_faces) == (5, 4)

    def test_four_n4_counts(self):
        mesh = generate_planar("four", 4)
        assert (mesh.n_vertices, mesh.n_faces) == (41, 64)

    def test_unstructured_deterministic(self):
        a = generate_planar("unstructured", 5, seed=42)
        b = generate_planar("unstructured", 5, seed=42)
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.faces, b.faces)

    def test_unstructured_boundary_pinned(self):
        mesh = generate_planar("unstructured", 6, seed=3)
        b = mesh.boundary_vertex_mask
        pts = mesh.vertices[b]
        on_edge = (
            (np.abs(pts[:, 0]) < 1e-15) | (np.abs(pts[:, 0] - 1) < 1e-15)
            | (np.abs(pts[:, 1]) < 1e-15) | (np.abs(pts[:, 1] - 1) < 1e-15)
        )
        assert on_edge.all()

    @pytest.mark.parametrize("kind", ["three", "four", "unstructured"])
    def test_euler_characteristic_is_one(self, kind):
        mesh = generate_planar(kind, 4, seed=9)
        assert mesh.n_vertices - mesh.n_edges + mesh.n_faces == 1

    def test_ccw_orientation(self):
        for kind in ("three", "four", "unstructured"):
            mesh = generate_planar(kind, 3, seed=1)
            p = mesh.vertices[mesh.faces]
            signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
                p[:, 1, 1] - p[:, 0, 1]
            ) * (p[:, 2, 0] - p[:, 0, 0])
            assert (signed > 0).all()

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            generate_planar("three", 0)

    def test_kind_aliases(self):
        assert DomainKind.parse("a") is DomainKind.THREE_DIRECTIONAL
        assert DomainKind.parse("b") is DomainKind.FOUR_DIRECTIONAL
        assert DomainKind.parse("c") is DomainKind.UNSTRUCTURED
        with pytest.raises(ValueError):
            DomainKind.parse("pentagonal")


class TestSubdivision:
    def test_face_count_quadruples(self):
        mesh = generate_planar("three", 1)
        assert subdivide_midpoint(mesh).n_faces == 4 * mesh.n_faces

    def test_max_edge_halves_on_planar(self):
        mesh = generate_planar("unstructured", 4, seed=7)
        r0 = mesh_stats(mesh).mesh_size_r
        r1 = mesh_stats(subdivide_midpoint(mesh)).mesh_size_r
        assert abs(r1 - r0 / 2) < 1e-15 * r0

    def test_three_n1_subdivided_matches_three_n2(self):
        a = subdivide_midpoint(generate_planar("three", 1))
        b = generate_planar("three", 2)
        va, fa = canonical_faces(a)
        vb, fb = canonical_faces(b)
        assert np.array_equal(va, vb)
        assert fa == fb

    def test_original_vertices_untouched(self, flat_unstructured):
        fine = subdivide_midpoint(flat_unstructured)
        assert np.array_equal(
            fine.vertices[: flat_unstructured.n_vertices], flat_unstructured.vertices
        )


class TestIcosphere:
    def test_counts_and_radius(self):
        for k in (0, 1, 2):
            mesh = icosphere(k)
            assert mesh.n_faces == 20 * 4 ** k
            assert mesh.n_vertices == 10 * 4 ** k + 2
            assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-14)

    def test_closed_surface(self):
        mesh = icosphere(2)
        assert not mesh.boundary_vertex_mask.any()
        assert mesh.n_vertices - mesh.n_edges + mesh.n_faces == 2


class TestRoundTrip:
    def test_off_round_trip_exact(self, flat_unstructured):
        back = load_mesh(save_off(flat_unstructured), "off")
        assert np.array_equal(back.vertices, flat_unstructured.vertices)
        assert np.array_equal(back.faces, flat_unstructured.faces)

    def test_obj_round_trip_exact(self, octahedron):
        back = load_mesh(save_obj(octahedron), "obj")
        assert np.array_equal(back.vertices, octahedron.vertices)
        assert np.array_equal(back.faces, octahedron.faces)
