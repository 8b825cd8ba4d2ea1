import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from projave.bodies import (
    Ball, DiscreteSphereMeasure, Ellipsoid, LpZonoid, Polytope, body_volume, cauchy_projection,
    classical_projection_body, disc_zonoid, ellipsoid_projection_body, isoperimetric_ratio,
    lp_projection_body, lp_surface_area_measure, perimeter, petty_product, polar_volume, polar_zonoid_norm,
    projected_norm_identity, shadow_area, standard_subspace_measure, subgroup_average_residual,
    surface_area_measure, surface_average_gap, surface_average_sides, surface_integral, volume,
)
from projave.exceptions import DegenerateInputError, DomainError, InvalidPolytopeError, PreconditionError
from projave.fixtures import cube, measure_from_dict, regular_simplex, simplex, uv_sphere
from projave.geometry import (
    STREAM_GRASSMANN, derive_generator, q_coefficient, sample_rotations, standard_frame, unit_ball_volume,
)
from projave.quadrature import QuadratureSpec

SIGMA = settings.PROJAVE['SIGMA']
DIAG = np.diag([2.0, 1.0, 0.5])
SHEAR = DIAG @ np.array([[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.2, 0.0, 1.0]])


def small_spec(**overrides):
    values = dict(seed=21, sphere_samples=20000, grassmann_samples=400, batch_size=2048)
    values.update(overrides)
    return QuadratureSpec(**values)


class MeasureTests(SimpleTestCase):
    def test_detects_even_measures(self):
        u = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]])
        even = DiscreteSphereMeasure(np.vstack([u, -u]), [1.0, 2.0, 1.0, 2.0])
        odd = DiscreteSphereMeasure(np.vstack([u, -u]), [1.0, 2.0, 1.0, 3.0])
        self.assertTrue(even.even)
        self.assertFalse(odd.even)
        # Pairs found in any order
        shuffled = DiscreteSphereMeasure(np.vstack([u[0], -u[1], -u[0], u[1]]), [1.0, 2.0, 1.0, 2.0])
        self.assertTrue(shuffled.even)

    def test_declared_even_is_checked(self):
        with self.assertRaises(PreconditionError):
            DiscreteSphereMeasure([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], even=True)

    def test_rejects_non_unit_atoms_and_bad_weights(self):
        with self.assertRaises(DomainError):
            DiscreteSphereMeasure([[1.0, 1.0]], [1.0])
        with self.assertRaises(DomainError):
            DiscreteSphereMeasure([[1.0, 0.0]], [0.0])

    def test_even_part_keeps_the_cosine_transform(self):
        measure = DiscreteSphereMeasure([[1.0, 0.0], [0.0, 1.0], [-0.6, -0.8]], [1.0, 2.0, 0.5])
        x = np.array([0.3, -1.2])
        even = measure.even_part()
        self.assertTrue(even.even)
        self.assertAlmostEqual(even.cosine_transform(x, 1.5), measure.cosine_transform(x, 1.5), places=13)
        self.assertAlmostEqual(even.total_mass, measure.total_mass, places=14)

    def test_spans_standard_subspace(self):
        measure = standard_subspace_measure(4, 2, 16, seed=3)
        self.assertTrue(measure.spans_standard_subspace(2))
        self.assertFalse(measure.spans_standard_subspace(1))
        self.assertAlmostEqual(measure.total_mass, 1.0, places=14)


class BodyTests(SimpleTestCase):
    def test_ellipsoid_support_and_volume(self):
        body = Ellipsoid(DIAG)
        self.assertAlmostEqual(body.support(np.array([1.0, 0.0, 0.0])), 2.0)
        np.testing.assert_allclose(body.support(np.eye(3)), [2.0, 1.0, 0.5])
        self.assertAlmostEqual(body_volume(body), unit_ball_volume(3), places=13)
        self.assertAlmostEqual(body.condition_number, 4.0, places=12)

    def test_singular_ellipsoid_is_degenerate(self):
        with self.assertRaises(DegenerateInputError):
            Ellipsoid(np.diag([1.0, 0.0, 1.0]))

    def test_ball_support(self):
        self.assertAlmostEqual(Ball(3, 2.0).support(np.array([3.0, 0.0, 4.0])), 10.0)

    def test_polytope_validation(self):
        good = cube(3)
        normals = good.normals.copy()
        normals[2] = [0.0, 0.6, 0.8]
        with self.assertRaises(InvalidPolytopeError) as ctx:
            Polytope(good.vertices, normals, good.areas, good.incident)
        self.assertEqual(ctx.exception.facet, 2)
        areas = good.areas.copy()
        areas[0] = 5.0
        with self.assertRaises(InvalidPolytopeError):
            Polytope(good.vertices, good.normals, areas, good.incident)

    def test_cube_volume_and_symmetry(self):
        body = cube(3)
        self.assertAlmostEqual(volume(body), 8.0, places=13)
        self.assertTrue(body.is_origin_symmetric())
        self.assertAlmostEqual(body.support(np.array([1.0, 1.0, 1.0])), 3.0)

    def test_linear_image_scales_volume_and_closes(self):
        image = cube(3).linear_image(SHEAR)
        self.assertAlmostEqual(volume(image), 8.0 * abs(np.linalg.det(SHEAR)), places=11)

    def test_off_centre_polytope_has_no_lp_measure(self):
        shifted = simplex([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with self.assertRaises(InvalidPolytopeError):
            lp_surface_area_measure(shifted, 2.0)


class ProjectionBodyTests(SimpleTestCase):
    def test_cauchy_formula_matches_shadow(self):
        body = cube(3)
        for u in ([0.0, 0.0, 1.0], [1.0, 1.0, 0.0], [0.3, -0.4, 0.866]):
            u = np.array(u) / np.linalg.norm(u)
            self.assertAlmostEqual(cauchy_projection(body, u), shadow_area(body, u), places=9)
        self.assertAlmostEqual(cauchy_projection(body, np.array([0.0, 0.0, 1.0])), 4.0, places=13)

    def test_classical_projection_body_of_cube(self):
        # h(Pi C, u) = 4 ||u||_1 for C = [-1, 1]^3
        u = np.array([0.2, -0.5, 0.7])
        self.assertAlmostEqual(classical_projection_body(cube(3)).support(u), 4.0 * np.sum(np.abs(u)), places=13)

    def test_lp_projection_body_of_cube(self):
        # Pi_1 C = (4/pi) C
        u = np.array([0.2, -0.5, 0.7])
        self.assertAlmostEqual(lp_projection_body(cube(3), 1.0).support(u),
                               4.0 / math.pi * np.sum(np.abs(u)), places=12)

    def test_lp_projection_body_of_ball_approximation(self):
        body = uv_sphere(40, 80)
        for p in (1.0, 2.0):
            projection = lp_projection_body(body, p)
            values = projection.support(np.eye(3))
            np.testing.assert_allclose(values, 1.0, rtol=0.02)

    def test_ellipsoid_projection_body_law(self):
        result = ellipsoid_projection_body(Ellipsoid(np.diag([2.0, 1.0, 1.0])), 2.0).matrix
        np.testing.assert_allclose(result, math.sqrt(2.0) * np.diag([0.5, 1.0, 1.0]), atol=1e-14)

    def test_non_symmetric_polytopes_use_the_even_part(self):
        body = simplex([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
        projection = lp_projection_body(body, 2.0)
        x = np.array([0.4, 0.1, -0.9])
        self.assertAlmostEqual(projection.support(x), projection.support(-x), places=13)

    def test_petty_product_of_ball_and_ellipsoid(self):
        spec = small_spec()
        for p in (1.0, 2.0):
            bound = unit_ball_volume(3) ** (3.0 / p)
            self.assertAlmostEqual(petty_product(Ball(3, 1.7), p, spec).value / bound, 1.0, places=12)
            estimate = petty_product(Ellipsoid(DIAG), p, spec)
            self.assertLess(abs(estimate.value - bound), SIGMA * estimate.std_error + 1e-12 * bound)

    def test_petty_product_of_cube(self):
        estimate = petty_product(cube(3), 1.0, small_spec())
        expected = 4.0 * math.pi ** 3 / 3.0
        self.assertLess(abs(estimate.value - expected), SIGMA * estimate.std_error)
        self.assertLess(estimate.value, unit_ball_volume(3) ** 3)

    def test_polar_volume_of_ellipsoid(self):
        estimate = polar_volume(Ellipsoid(DIAG).support, 3, small_spec())
        self.assertLess(abs(estimate.value - unit_ball_volume(3)), SIGMA * estimate.std_error)

    def test_polar_volume_needs_interior_origin(self):
        with self.assertRaises(DegenerateInputError):
            polar_volume(lambda u: u[:, 0], 3, small_spec(sphere_samples=10))


class SurfaceTests(SimpleTestCase):
    def test_perimeters(self):
        self.assertAlmostEqual(perimeter(cube(3)).value, 24.0, places=13)
        self.assertAlmostEqual(perimeter(Ball(3, 2.0)).value, 16.0 * math.pi, places=12)

    def test_isoperimetric_ratio(self):
        self.assertAlmostEqual(isoperimetric_ratio(Ball(3, 3.0)).value, 1.0, places=12)
        ratio = isoperimetric_ratio(cube(3)).value
        # 24 / (3 (4 pi / 3)^(1/3) 4) = (6 / pi)^(1/3)
        self.assertAlmostEqual(ratio, (6.0 / math.pi) ** (1.0 / 3.0), places=12)

    def test_ellipsoid_surface_integral_of_linear_functional(self):
        # |det A| int |(A^{-1} e_1) . u| dsigma = 2 pi ||A^{-1} e_1|| = pi
        spec = small_spec(sphere_samples=40000)
        estimate = surface_integral(Ellipsoid(DIAG), lambda v: np.abs(v[:, 0]), spec)
        expected = math.pi
        self.assertLess(abs(estimate.value - expected), SIGMA * estimate.std_error)


class ZonoidTests(SimpleTestCase):
    def test_segment_zonoid_is_exact(self):
        zonoid = disc_zonoid(3, 1, 2.0, 2)
        self.assertAlmostEqual(zonoid.support(np.array([3.0, 4.0, 0.0])), 3.0, places=14)

    def test_disc_zonoid_matches_q(self):
        zonoid = disc_zonoid(3, 2, 2.0, 20000, seed=5)
        x = np.array([1.0, 2.0, 3.0])
        # mean of (x . u)^2 over S^1 in E_2 is |x|E_2|^2 / 2
        self.assertAlmostEqual(zonoid.support(x) ** 2 / (q_coefficient(2, 2.0) * 5.0), 1.0, delta=0.03)

    def test_zonoid_needs_even_generator(self):
        with self.assertRaises(PreconditionError):
            LpZonoid(1.0, DiscreteSphereMeasure([[1.0, 0.0]], [1.0]))

    def test_polar_norm_degenerates_without_spanning(self):
        zonoid = disc_zonoid(3, 2, 1.0, 16)
        with self.assertRaises(DegenerateInputError):
            polar_zonoid_norm(zonoid, np.ones(3))
        value = polar_zonoid_norm(zonoid, np.array([1.0, 0.0, 0.0]), frame=standard_frame(3, 2))
        self.assertGreater(value, 0.0)

    def test_projected_norm_identity(self):
        zonoid = disc_zonoid(4, 2, 1.5, 64, seed=1)
        rotations = sample_rotations(derive_generator(2, STREAM_GRASSMANN), 4, 3)
        x = np.array([0.5, -1.0, 2.0, 0.25])
        for rotation in rotations:
            left, right = projected_norm_identity(zonoid, rotation, x)
            self.assertAlmostEqual(left, right, places=12)


class AveragingTests(SimpleTestCase):
    def test_subgroup_average_exact_case(self):
        # i = 1, j = 2, p = 2, x = e_1: q_{1,2} E[cos^2] = 1/2 = q_{2,2} |x|^2
        residual = subgroup_average_residual(np.array([1.0, 0.0, 0.0]), 1, 2, 2.0, small_spec(grassmann_samples=4000))
        self.assertLess(abs(residual.value), SIGMA * residual.std_error)

    def test_subgroup_average_random_point(self):
        x = np.array([0.3, -1.1, 0.8])
        residual = subgroup_average_residual(x, 2, 3, 1.0, small_spec(grassmann_samples=4000))
        self.assertLess(abs(residual.value), SIGMA * residual.std_error)

    def test_subgroup_average_rejects_bad_dimensions(self):
        with self.assertRaises(DomainError):
            subgroup_average_residual(np.ones(3), 2, 2, 1.0, small_spec())
        with self.assertRaises(DomainError):
            subgroup_average_residual(np.zeros(3), 1, 2, 1.0, small_spec())

    def test_surface_average_equal_dimensions(self):
        left, right = surface_average_sides(cube(3), 2, 2, 1.0, small_spec())
        self.assertIs(left, right)

    def test_surface_average_cube_order(self):
        gap = surface_average_gap(cube(3), 1, 3, 1.0, small_spec(grassmann_samples=2000))
        self.assertGreater(gap.value, 3.0 * gap.std_error)


def every_body_variant():
    generator = measure_from_dict({'kind': 'random', 'i': 3, 'pairs': 6, 'seed': 4}, 3)
    return {
        'ball': Ball(3, 1.5),
        'ellipsoid': Ellipsoid(SHEAR),
        'cube': cube(3),
        'simplex': regular_simplex(3),
        'zonoid': LpZonoid(1.5, generator),
    }


class SupportLawTests(SimpleTestCase):
    def test_subadditive_on_random_pairs(self):
        rng = np.random.default_rng(31)
        x = rng.standard_normal((200, 3))
        y = rng.standard_normal((200, 3))
        for name, body in every_body_variant().items():
            excess = body.support(x + y) - body.support(x) - body.support(y)
            self.assertLessEqual(float(np.max(excess)), 1e-9, name)

    def test_rotated_body(self):
        rotation = sample_rotations(derive_generator(12, STREAM_GRASSMANN), 3, 1)[0]
        x = np.random.default_rng(32).standard_normal((50, 3))
        # h(phi K, x) = h(K, phi^{-1} x); rows transform as x @ phi
        pulled_back = x @ rotation
        polytope = regular_simplex(3)
        np.testing.assert_allclose(polytope.linear_image(rotation).support(x), polytope.support(pulled_back),
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(Ellipsoid(rotation @ SHEAR).support(x), Ellipsoid(SHEAR).support(pulled_back),
                                   rtol=1e-12)
        zonoid = every_body_variant()['zonoid']
        np.testing.assert_allclose(zonoid.rotated(rotation).support(x), zonoid.support(pulled_back), rtol=1e-12)
        np.testing.assert_allclose(Ball(3, 2.0).support(x), Ball(3, 2.0).support(pulled_back), rtol=1e-12)


class SurfaceMeasureLawTests(SimpleTestCase):
    def test_lp_measure_scales_with_dilation(self):
        body = regular_simplex(3)
        for p in (1.0, 1.5, 2.0):
            base = lp_surface_area_measure(body, p)
            for factor in (0.5, 2.0):
                dilated = lp_surface_area_measure(body.scaled(factor), p)
                np.testing.assert_array_equal(dilated.directions, base.directions)
                np.testing.assert_allclose(dilated.weights, factor ** (3 - p) * base.weights, rtol=1e-9)

    def test_simplex_volume_matches_the_determinant(self):
        corners = np.array([[0.0, 0.0, 0.0], [2.0, 0.1, 0.0], [0.3, 1.5, 0.2], [0.1, 0.4, 1.2]])
        corners -= corners.mean(axis=0)
        expected = abs(np.linalg.det(corners[1:] - corners[0])) / math.factorial(3)
        self.assertAlmostEqual(volume(simplex(corners)), expected, delta=1e-12 * expected)

    def test_regular_simplex_facets_against_triangle_areas(self):
        body = regular_simplex(3)
        measure = surface_area_measure(body)
        self.assertEqual(measure.size, 4)
        triangles = []
        for opposite in range(4):
            a, b, c = body.vertices[[k for k in range(4) if k != opposite]]
            triangles.append(0.5 * np.linalg.norm(np.cross(b - a, c - a)))
        np.testing.assert_allclose(np.sort(measure.weights), np.sort(triangles), rtol=1e-12)
        np.testing.assert_allclose(measure.weights, measure.weights[0], rtol=1e-12)
        self.assertAlmostEqual(measure.total_mass, float(np.sum(triangles)), places=12)
