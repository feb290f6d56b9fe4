import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvmin.distance import (ReferenceSurface, brute_force_distance,
                              cached_query, distance_eval, hausdorff_distance)
from curvmin.errors import MeshError
from curvmin.mesh import (TriMesh, build_icosphere, perturb_radial)
from curvmin.weights import (AxisQuadraticWeight, ConstantWeight,
                             RadialQuadraticWeight, normal_weight_derivative,
                             weight_eval, weight_from_dict)

from conftest import planar_patch

ALL_WEIGHTS = [
    ConstantWeight(1.0),
    ConstantWeight(3.5),
    RadialQuadraticWeight(center=(0.0, 0.0, 0.0), coeff=1.0),
    RadialQuadraticWeight(center=(0.5, -1.0, 2.0), coeff=0.25),
    AxisQuadraticWeight(axis=(0.0, 0.0, 1.0), coeff=1.0),
    AxisQuadraticWeight(axis=(1.0, 1.0, 1.0), coeff=0.7),
]


class TestWeightValues:
    def test_constant(self):
        value, grad = weight_eval(ConstantWeight(1.0), (0.3, -2.0, 5.0))
        assert value == 1.0
        assert np.array_equal(grad, np.zeros(3))

    def test_radial_quadratic_analytic(self):
        value, grad = weight_eval(
            RadialQuadraticWeight(center=(0, 0, 0), coeff=1.0), (1.0, 0, 0))
        assert value == 2.0
        assert np.allclose(grad, [2.0, 0.0, 0.0])

    def test_axis_quadratic_invariant_along_plane(self):
        w = AxisQuadraticWeight(axis=(0, 0, 1), coeff=2.0)
        v1, _ = weight_eval(w, (5.0, -3.0, 1.0))
        v2, _ = weight_eval(w, (0.0, 100.0, 1.0))
        assert v1 == v2 == 3.0

    @pytest.mark.parametrize("weight", ALL_WEIGHTS)
    def test_lower_bound_on_million_points(self, weight):
        rng = np.random.default_rng(0)
        pts = rng.normal(scale=50.0, size=(1_000_000, 3))
        values, _ = weight.evaluate(pts)
        assert values.min() >= 1.0

    @pytest.mark.parametrize("weight", ALL_WEIGHTS)
    def test_gradient_matches_central_difference(self, weight):
        rng = np.random.default_rng(1)
        pts = rng.normal(scale=3.0, size=(100, 3))
        _, grads = weight.evaluate(pts)
        eps = 1e-6
        for axis in range(3):
            shift = np.zeros(3)
            shift[axis] = eps
            up, _ = weight.evaluate(pts + shift)
            down, _ = weight.evaluate(pts - shift)
            fd = (up - down) / (2.0 * eps)
            scale = np.maximum(np.abs(grads[:, axis]), 1.0)
            assert np.abs(fd - grads[:, axis]).max() / scale.max() <= 1e-6

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.01, max_value=10.0),
           st.floats(min_value=-5.0, max_value=5.0))
    def test_radial_gradient_property(self, coeff, cx):
        w = RadialQuadraticWeight(center=(cx, 0.0, 0.0), coeff=coeff)
        pt = np.array([1.3, -0.4, 2.2])
        value, grad = weight_eval(w, pt)
        offset = pt - np.array([cx, 0.0, 0.0])
        assert np.isclose(value, 1.0 + coeff * offset @ offset)
        assert np.allclose(grad, 2.0 * coeff * offset)

    def test_validation(self):
        with pytest.raises(ValueError):
            ConstantWeight(0.5)
        with pytest.raises(ValueError):
            RadialQuadraticWeight(coeff=0.0)
        with pytest.raises(ValueError):
            AxisQuadraticWeight(axis=(0, 0, 0))

    def test_needs_penalisation_flags(self):
        assert not ConstantWeight(1.0).needs_penalisation
        assert not RadialQuadraticWeight(coeff=1.0).needs_penalisation
        assert AxisQuadraticWeight(coeff=1.0).needs_penalisation

    def test_tagged_record_round_trip(self):
        for w in ALL_WEIGHTS:
            again = weight_from_dict(w.to_dict())
            assert again == w

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown weight kind"):
            weight_from_dict({"kind": "gaussian"})
        with pytest.raises(ValueError, match="missing"):
            weight_from_dict({"value": 1.0})


class TestNormalWeightDerivative:
    def test_constant_gives_zero(self, ico2):
        field = normal_weight_derivative(ico2, ConstantWeight(2.0))
        assert np.array_equal(field, np.zeros(ico2.num_vertices))

    def test_radial_on_unit_sphere(self, ico3):
        # grad xi = 2x and nu = x on the unit sphere, so the field is ~2
        field = normal_weight_derivative(
            ico3, RadialQuadraticWeight(center=(0, 0, 0), coeff=1.0))
        assert np.abs(field - 2.0).max() <= 0.01

    def test_orientation_flip_negates(self, ico2):
        w = RadialQuadraticWeight(center=(0.2, 0.1, -0.3), coeff=0.8)
        flipped = TriMesh(ico2.positions, ico2.triangles[:, ::-1])
        a = normal_weight_derivative(ico2, w)
        b = normal_weight_derivative(flipped, w)
        assert np.allclose(b, -a, atol=1e-12)


@pytest.fixture(scope="module")
def unit_reference(ico3):
    return ReferenceSurface(ico3)


class TestDistance:
    def test_point_on_surface(self, unit_reference, ico3):
        d, grad = distance_eval(unit_reference, ico3.positions[17])
        assert d == 0.0
        assert np.array_equal(grad, np.zeros(3))

    def test_outside_unit_sphere(self, unit_reference, ico3):
        # closest point lies on the inscribed mesh, slightly inside radius 1
        d, grad = distance_eval(unit_reference, (2.0, 0.0, 0.0))
        brute_d, brute_g, _ = brute_force_distance(ico3, [(2.0, 0.0, 0.0)])
        assert d == brute_d[0]
        assert 0.98 <= d <= 1.0
        assert grad @ np.array([1.0, 0.0, 0.0]) > 0.999

    def test_matches_brute_force_on_random_points(self, unit_reference, ico3):
        rng = np.random.default_rng(3)
        pts = rng.normal(scale=1.5, size=(1000, 3))
        d_fast, g_fast, t_fast = unit_reference.query(pts)
        d_brute, g_brute, t_brute = brute_force_distance(ico3, pts)
        assert np.abs(d_fast - d_brute).max() <= 1e-12
        assert np.abs(g_fast - g_brute).max() <= 1e-12
        assert np.array_equal(t_fast, t_brute)

    def test_gradient_norm_bound(self, unit_reference):
        rng = np.random.default_rng(4)
        pts = rng.normal(scale=2.0, size=(2000, 3))
        _, grad, _ = unit_reference.query(pts)
        assert np.linalg.norm(grad, axis=1).max() <= 1.0 + 1e-12

    def test_equidistant_tie_breaks_to_lowest_triangle(self, unit_reference,
                                                       ico3):
        # center of the sphere is equidistant from many triangles
        _, _, tri_fast = unit_reference.query(np.zeros((1, 3)))
        _, _, tri_brute = brute_force_distance(ico3, np.zeros((1, 3)))
        assert tri_fast[0] == tri_brute[0]

    def test_rejects_invalid_reference(self):
        open_mesh, _ = planar_patch(4)
        with pytest.raises(MeshError):
            ReferenceSurface(open_mesh)

    def test_cached_query_reuses_result(self, unit_reference, ico2):
        probe = perturb_radial(ico2, 0.02, 5)
        first = cached_query(unit_reference, probe)
        second = cached_query(unit_reference, probe)
        assert first is second

    def test_hausdorff(self, ico3):
        assert hausdorff_distance(ico3, ico3) == 0.0
        grown = ico3.with_positions(ico3.positions * 1.02)
        d = hausdorff_distance(ico3, grown)
        assert 0.015 <= d <= 0.021
