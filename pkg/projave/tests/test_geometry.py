import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from projave.exceptions import DomainError
from projave.geometry import (
    STREAM_GRASSMANN, STREAM_SPHERE, Frame, Rotation, bv_sharp_constant, classical_bv_constant,
    classical_constant, derive_generator, project_length, q_coefficient, sample_frame,
    sample_rotations, sample_sphere, sample_subgroup_rotation, sample_subgroup_rotations, sharp_constant,
    sobolev_conjugate, standard_frame, unit_ball_volume, unit_sphere_area,
)

SIGMA = settings.PROJAVE['SIGMA']


class ConstantsTests(SimpleTestCase):
    def test_unit_ball_volumes(self):
        self.assertAlmostEqual(unit_ball_volume(0), 1.0, places=14)
        self.assertAlmostEqual(unit_ball_volume(1), 2.0, places=14)
        self.assertAlmostEqual(unit_ball_volume(2), math.pi, places=13)
        self.assertAlmostEqual(unit_ball_volume(3), 4.0 * math.pi / 3.0, places=13)
        # Real arguments: omega_{1/2} = pi^(1/4) / Gamma(5/4)
        self.assertAlmostEqual(unit_ball_volume(0.5), math.pi ** 0.25 / math.gamma(1.25), places=13)

    def test_large_dimension_does_not_overflow(self):
        value = unit_ball_volume(50)
        self.assertTrue(0.0 < value < 1e-12)

    def test_sphere_area(self):
        self.assertAlmostEqual(unit_sphere_area(3), 4.0 * math.pi, places=12)

    def test_q_coefficient(self):
        for p in (1.0, 1.5, 2.0, 2.5, 7.0):
            self.assertAlmostEqual(q_coefficient(1, p), 1.0, places=13)
        # q_{n,2} = 1/n and q_{2,1} = 2/pi
        for n in (2, 3, 5, 8):
            self.assertAlmostEqual(q_coefficient(n, 2.0), 1.0 / n, places=13)
        self.assertAlmostEqual(q_coefficient(2, 1.0), 2.0 / math.pi, places=13)

    def test_sharp_constant_n3_p2(self):
        self.assertAlmostEqual(sharp_constant(3, 2.0) / (math.pi ** 2 / 4.0) ** (1.0 / 3.0), 1.0, places=12)
        self.assertAlmostEqual(sharp_constant(3, 2.0), 1.35128, delta=1e-4)

    def test_classical_constant_n3_p2(self):
        expected = math.sqrt(3.0) * (math.pi / 2.0) ** (2.0 / 3.0)
        self.assertAlmostEqual(classical_constant(3, 2.0) / expected, 1.0, places=10)
        self.assertAlmostEqual(classical_constant(3, 2.0), 2.34048, delta=1e-4)

    def test_p1_constants(self):
        for n in range(3, 9):
            self.assertAlmostEqual(sharp_constant(n, 1.0) / bv_sharp_constant(n), 1.0, places=12)
            self.assertAlmostEqual(classical_constant(n, 1.0) / classical_bv_constant(n), 1.0, places=12)
        self.assertAlmostEqual(sharp_constant(3, 1.0), 2.41800, delta=1e-4)

    def test_sharp_constant_is_continuous_at_p1(self):
        for n in (3, 5):
            self.assertAlmostEqual(sharp_constant(n, 1.0 + 1e-8) / sharp_constant(n, 1.0), 1.0, places=6)

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            sharp_constant(3, 3.0)
        with self.assertRaises(DomainError):
            sharp_constant(3, 0.5)
        with self.assertRaises(DomainError):
            q_coefficient(0, 2.0)
        with self.assertRaises(DomainError):
            unit_ball_volume(-1.0)
        with self.assertRaises(DomainError):
            sobolev_conjugate(2, 2.0)

    def test_sobolev_conjugate(self):
        self.assertEqual(sobolev_conjugate(3, 2.0), 6.0)
        self.assertEqual(sobolev_conjugate(3, 1.0), 1.5)


class SamplingTests(SimpleTestCase):
    def test_derived_streams_are_reproducible_and_distinct(self):
        a = derive_generator(7, STREAM_SPHERE, 0).random(4)
        b = derive_generator(7, STREAM_SPHERE, 0).random(4)
        c = derive_generator(7, STREAM_GRASSMANN, 0).random(4)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_seed_is_mandatory(self):
        with self.assertRaises(DomainError):
            derive_generator(None, STREAM_SPHERE)

    def test_rotations_are_special_orthogonal(self):
        rotations = sample_rotations(derive_generator(1, STREAM_GRASSMANN), 4, 50)
        for q in rotations:
            np.testing.assert_allclose(q.T @ q, np.eye(4), atol=1e-12)
            self.assertAlmostEqual(np.linalg.det(q), 1.0, places=12)

    def test_haar_first_column_is_uniform(self):
        # E[u_1^2] = 1/n for the first column of a Haar rotation.
        rotations = sample_rotations(derive_generator(3, STREAM_GRASSMANN), 3, 20000)
        squares = rotations[:, 0, 0] ** 2
        se = squares.std(ddof=1) / math.sqrt(squares.size)
        self.assertLess(abs(squares.mean() - 1.0 / 3.0), SIGMA * se)

    def test_subgroup_rotations_fix_the_complement(self):
        block = sample_subgroup_rotations(derive_generator(2, STREAM_GRASSMANN), 4, 2, 10)
        for q in block:
            np.testing.assert_array_equal(q[2:, 2:], np.eye(2))
            np.testing.assert_array_equal(q[:2, 2:], np.zeros((2, 2)))
            self.assertAlmostEqual(np.linalg.det(q[:2, :2]), 1.0, places=12)

    def test_single_subgroup_rotation(self):
        rotation = sample_subgroup_rotation(derive_generator(2, STREAM_GRASSMANN), 3, 2)
        self.assertIsInstance(rotation, Rotation)
        np.testing.assert_allclose(rotation.apply(np.array([0.0, 0.0, 1.0])), [0.0, 0.0, 1.0], atol=1e-15)

    def test_sphere_points_have_unit_norm(self):
        points = sample_sphere(derive_generator(4, STREAM_SPHERE), 5, 100)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-14)

    def test_sample_frame_is_orthonormal(self):
        frame = sample_frame(derive_generator(5, STREAM_GRASSMANN), 5, 3)
        self.assertEqual(frame.dim_sub, 3)
        np.testing.assert_allclose(frame.basis.T @ frame.basis, np.eye(3), atol=1e-12)

    def test_projected_square_norm_averages_to_the_dimension_ratio(self):
        # E ||v|E||^2 = i / n for a unit vector v and Haar-random E in Gr(n, i)
        v = np.array([0.5, -0.5, 0.5, 0.5])
        for i in (1, 2):
            rng = derive_generator(8, STREAM_GRASSMANN, i)
            squares = np.array([project_length(v, sample_frame(rng, 4, i)) ** 2 for _ in range(4000)])
            se = squares.std(ddof=1) / math.sqrt(squares.size)
            self.assertLess(abs(squares.mean() - i / 4.0), SIGMA * se)


class FrameTests(SimpleTestCase):
    def test_standard_frame_projection(self):
        frame = standard_frame(3, 2)
        self.assertAlmostEqual(project_length(np.array([3.0, 4.0, 12.0]), frame), 5.0, places=14)
        np.testing.assert_array_equal(frame.projector(), np.diag([1.0, 1.0, 0.0]))

    def test_project_length_of_rows(self):
        lengths = project_length(np.array([[1.0, 0.0, 5.0], [0.0, 2.0, 1.0]]), standard_frame(3, 1))
        np.testing.assert_allclose(lengths, [1.0, 0.0])

    def test_frame_rejects_non_orthonormal_basis(self):
        with self.assertRaises(DomainError):
            Frame(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))

    def test_rotation_rejects_reflections(self):
        with self.assertRaises(DomainError):
            Rotation(np.diag([1.0, 1.0, -1.0]))

    def test_rotation_frame_and_inverse(self):
        q = sample_rotations(derive_generator(6, STREAM_GRASSMANN), 3, 1)[0]
        rotation = Rotation(q)
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(rotation.inverse().apply(rotation.apply(x)), x, atol=1e-13)
        np.testing.assert_array_equal(rotation.frame(2).basis, q[:, :2])
