import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvmin.errors import MeshError, ObjFormatError
from curvmin.mesh import (TriMesh, build_icosphere, enclosed_volume, load_obj,
                          perturb_radial, rescale_to_area, save_obj,
                          total_area, validate, vertex_measure)

from conftest import relerr


def icosahedron_area_unit_circumradius():
    # 20 equilateral faces with edge 4 / sqrt(10 + 2 sqrt 5)
    edge = 4.0 / math.sqrt(10.0 + 2.0 * math.sqrt(5.0))
    return 20.0 * (math.sqrt(3.0) / 4.0) * edge ** 2


class TestIcosphere:
    def test_icosahedron_combinatorics(self):
        m = build_icosphere(0, 1.0)
        assert (m.num_vertices, m.num_edges, m.num_triangles) == (12, 30, 20)
        assert m.euler_characteristic() == 2

    @pytest.mark.parametrize("s", [0, 1, 2, 3, 4])
    def test_vertex_count_formula(self, s):
        assert build_icosphere(s, 1.0).num_vertices == 10 * 4 ** s + 2

    def test_vertices_on_sphere(self):
        m = build_icosphere(2, 1.0)
        assert m.num_vertices == 162
        norms = np.linalg.norm(m.positions, axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-12

    def test_radius_two_area_near_analytic(self):
        # inscribed mesh area is slightly below the smooth 4 pi r^2
        area = total_area(build_icosphere(3, 2.0))
        assert area < 16.0 * math.pi
        assert relerr(area, 16.0 * math.pi) < 0.01

    def test_subdivision_cap(self):
        with pytest.raises(ValueError):
            build_icosphere(9, 1.0)
        with pytest.raises(ValueError):
            build_icosphere(-1, 1.0)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            build_icosphere(1, 0.0)

    def test_outward_orientation(self):
        assert enclosed_volume(build_icosphere(1, 1.0)) > 0


class TestValidate:
    def test_icosphere_passes(self, ico2):
        report = validate(ico2)
        assert report.ok and report.closed and report.oriented
        assert report.euler_characteristic == 2

    def test_deleted_face_detected(self, ico2):
        broken = TriMesh(ico2.positions, ico2.triangles[1:])
        report = validate(broken)
        assert not report.ok
        assert report.boundary_edges == 3
        assert any("boundary" in m for m in report.messages)

    def test_flipped_face_detected(self, ico2):
        tris = np.array(ico2.triangles)
        tris[0] = tris[0][::-1]
        report = validate(TriMesh(ico2.positions, tris))
        assert not report.ok
        assert not report.oriented
        assert any("orientation" in m for m in report.messages)

    def test_wrong_euler_characteristic(self, ico2):
        # two disjoint spheres: closed and oriented but chi = 4
        n = ico2.num_vertices
        pos = np.concatenate([ico2.positions,
                              ico2.positions + np.array([5.0, 0, 0])])
        tris = np.concatenate([ico2.triangles, ico2.triangles + n])
        report = validate(TriMesh(pos, tris))
        assert not report.ok
        assert report.euler_characteristic == 4

    def test_dumbbell_passes(self, dumbbell):
        assert validate(dumbbell).ok


class TestVertexMeasure:
    def test_icosahedron_cells_equal_and_sum_to_oracle(self):
        m = build_icosphere(0, 1.0)
        a = vertex_measure(m)
        assert np.allclose(a, a[0], rtol=1e-12)
        assert relerr(a.sum(), icosahedron_area_unit_circumradius()) < 1e-12

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_partition_of_area(self, ico3, seed):
        m = perturb_radial(ico3, 0.05, seed)
        assert relerr(vertex_measure(m).sum(), total_area(m)) <= 1e-12

    def test_positive(self, ico3):
        m = perturb_radial(ico3, 0.08, 5)
        assert vertex_measure(m).min() > 0

    def test_scaling_law(self, ico2):
        a = vertex_measure(ico2)
        scaled = ico2.with_positions(ico2.positions * 3.0)
        assert np.allclose(vertex_measure(scaled), 9.0 * a, rtol=1e-12)

    def test_degenerate_triangle_rejected(self):
        pos = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0], [0, 1.0, 0]])
        tris = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])
        with pytest.raises(MeshError):
            vertex_measure(TriMesh(pos, tris))


class TestRescale:
    def test_doubles_radii(self, ico2):
        scaled = rescale_to_area(ico2, 4.0 * total_area(ico2))
        r = np.linalg.norm(scaled.positions, axis=1)
        r0 = np.linalg.norm(ico2.positions, axis=1)
        assert np.allclose(r, 2.0 * r0, rtol=1e-12)

    def test_exact_area_and_idempotent(self, ico3):
        target = 16.0 * math.pi
        once = rescale_to_area(ico3, target)
        assert relerr(total_area(once), target) <= 1e-12
        twice = rescale_to_area(once, target)
        assert np.abs(twice.positions - once.positions).max() <= 1e-12

    def test_identity_at_current_area(self, ico2):
        same = rescale_to_area(ico2, total_area(ico2))
        assert np.abs(same.positions - ico2.positions).max() <= 1e-12

    def test_inscribed_sphere_scales_up(self, ico3):
        # mesh area < 4 pi, so matching the smooth sphere area grows it
        scaled = rescale_to_area(ico3, 4.0 * math.pi)
        assert np.linalg.norm(scaled.positions, axis=1).min() > 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=0.1, max_value=100.0))
    def test_idempotency_property(self, area):
        m = rescale_to_area(build_icosphere(1, 1.0), area)
        again = rescale_to_area(m, area)
        assert np.abs(again.positions - m.positions).max() <= 1e-12

    def test_rejects_bad_area(self, ico2):
        with pytest.raises(ValueError):
            rescale_to_area(ico2, -1.0)


class TestPerturb:
    def test_deterministic(self, ico2):
        a = perturb_radial(ico2, 0.05, 7)
        b = perturb_radial(ico2, 0.05, 7)
        assert np.array_equal(a.positions, b.positions)

    def test_amplitude_bound(self, ico2):
        m = perturb_radial(ico2, 0.05, 3)
        r = np.linalg.norm(m.positions, axis=1)
        assert r.min() >= 0.95 - 1e-12 and r.max() <= 1.05 + 1e-12


class TestObjIO:
    def test_round_trip(self, tmp_path, ico2):
        m = perturb_radial(ico2, 0.03, 11)
        path = tmp_path / "mesh.obj"
        save_obj(m, path)
        back = load_obj(path)
        assert np.array_equal(back.triangles, m.triangles)
        assert np.abs(back.positions - m.positions).max() <= 1e-15

    def test_one_based_indices(self, tmp_path):
        path = tmp_path / "tet.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
                        "f 1 2 3\nf 1 4 2\nf 2 4 3\nf 1 3 4\n")
        m = load_obj(path)
        assert m.num_vertices == 4
        assert m.triangles.min() == 0 and m.triangles.max() == 3
        assert validate(m).ok

    def test_quad_face_rejected(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ObjFormatError, match="non-triangular"):
            load_obj(path)

    def test_out_of_range_index(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
        with pytest.raises(ObjFormatError, match="out of range"):
            load_obj(path)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ObjFormatError, match="cannot read"):
            load_obj(tmp_path / "missing.obj")

    def test_unsupported_record(self, tmp_path):
        path = tmp_path / "vn.obj"
        path.write_text("v 0 0 0\nvn 0 0 1\n")
        with pytest.raises(ObjFormatError, match="unsupported record"):
            load_obj(path)

    def test_comments_ignored(self, tmp_path, ico2):
        path = tmp_path / "c.obj"
        save_obj(ico2, path)
        text = "# generated\n\n" + path.read_text()
        path.write_text(text)
        assert load_obj(path).num_vertices == ico2.num_vertices


class TestImmutability:
    def test_setattr_blocked(self, ico2):
        with pytest.raises(AttributeError):
            ico2.positions = np.zeros((1, 3))

    def test_arrays_frozen(self, ico2):
        with pytest.raises(ValueError):
            ico2.positions[0, 0] = 1.0

    def test_malformed_inputs(self):
        with pytest.raises(MeshError):
            TriMesh(np.zeros((3, 2)), np.array([[0, 1, 2]]))
        with pytest.raises(MeshError):
            TriMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))
        with pytest.raises(MeshError):
            TriMesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))


class TestAdjacency:
    def test_vertex_triangles(self, ico2):
        vt = ico2.vertex_triangles
        assert len(vt) == ico2.num_vertices
        for v in (0, 57, 100):
            faces = vt[v]
            assert all(v in ico2.triangles[f] for f in faces)
        counts = np.array([len(f) for f in vt])
        assert counts.sum() == 3 * ico2.num_triangles
        assert set(np.unique(counts)) == {5, 6}

    def test_edge_opposite_vertices(self, ico2):
        opp = ico2.edge_opposite_vertices
        assert opp.shape == (ico2.num_edges, 2)
        assert np.all(opp >= 0)
        for k in (0, 17, 211):
            a, b = ico2.edges[k]
            for o in opp[k]:
                face = sorted([a, b, o])
                assert any(sorted(t) == face for t in ico2.triangles)
