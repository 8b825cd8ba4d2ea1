import math

import numpy as np
from django.test import SimpleTestCase

from projave.bodies import Polytope
from projave.exceptions import ConfigurationError, DomainError
from projave.functionals import radial_energy, radial_power
from projave.geometry import sobolev_conjugate
from projave.profiles import (
    AffineExtremizer, AubinTalenti, CharOfBody, Gaussian, MollifiedBall, profile_from_dict, profile_to_dict,
)
from projave.quadrature import QuadratureSpec

SPEC = QuadratureSpec(seed=5, radial_nodes=64)


def numerical_gradient(f, x, h=1e-6):
    steps = np.eye(x.size) * h
    return np.array([(f.evaluate(x + e) - f.evaluate(x - e)) / (2.0 * h) for e in steps])


class EvaluationTests(SimpleTestCase):
    def test_aubin_talenti_values(self):
        f = AubinTalenti(3, 2.0)
        self.assertAlmostEqual(f.evaluate(np.zeros(3)), 1.0)
        # (1 + r^2)^(-1/2) at r = sqrt(3)
        self.assertAlmostEqual(f.evaluate(np.ones(3)), 0.5, places=14)
        np.testing.assert_array_equal(f.gradient(np.zeros(3)), np.zeros(3))

    def test_gradients_match_finite_differences(self):
        x = np.array([0.4, -0.3, 0.9])
        profiles = [
            AubinTalenti(3, 1.5, a=0.7, b=1.3, x0=[0.1, 0.0, -0.2]),
            AffineExtremizer(3, 2.0, matrix=[[1.0, 0.2, 0.0], [0.0, 2.0, 0.0], [0.3, 0.0, 0.5]]),
            Gaussian(3, scale=1.5, amplitude=2.0),
            MollifiedBall(3, radius=0.8, width=0.5),
        ]
        for f in profiles:
            np.testing.assert_allclose(f.gradient(x), numerical_gradient(f, x), rtol=1e-6, atol=1e-8)

    def test_rows_evaluate_together(self):
        f = Gaussian(2)
        values = f.evaluate(np.array([[0.0, 0.0], [1.0, 0.0]]))
        np.testing.assert_allclose(values, [1.0, math.exp(-1.0)])

    def test_radial_detection(self):
        self.assertTrue(Gaussian(3, scale=2.0).is_radial)
        self.assertFalse(Gaussian(3, matrix=np.diag([1.0, 2.0, 1.0])).is_radial)

    def test_composition_changes_the_argument(self):
        f = AubinTalenti(3, 2.0, a=0.5, b=2.0)
        matrix = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.2, 2.0]])
        g = f.composed(matrix)
        self.assertIsInstance(g, AffineExtremizer)
        x = np.array([0.3, -0.7, 0.2])
        self.assertAlmostEqual(g.evaluate(x), f.evaluate(matrix @ x), places=13)

    def test_mollified_ball_only_scales(self):
        f = MollifiedBall(3)
        self.assertEqual(f.scaled(2.0).amplitude, 2.0)
        with self.assertRaises(DomainError):
            f.composed(np.diag([1.0, 2.0, 1.0]))

    def test_extremizers_need_p_below_n(self):
        with self.assertRaises(DomainError):
            AubinTalenti(3, 3.0)
        with self.assertRaises(DomainError):
            AffineExtremizer(3, 1.0)


class ClosedFormTests(SimpleTestCase):
    def assertClose(self, a, b, rel):
        self.assertLess(abs(a - b), rel * abs(b), f"{a} vs {b}")

    def test_energy_closed_forms_match_quadrature(self):
        profiles = [
            (AubinTalenti(3, 2.0, a=0.5, b=2.0), 2.0),
            (AffineExtremizer(4, 2.0, a=1.5), 2.0),
            (Gaussian(3), 1.5),
            (MollifiedBall(3, width=0.3), 1.0),
        ]
        for f, p in profiles:
            closed = radial_energy(f, p, SPEC).value
            numeric = radial_energy(f, p, SPEC, method='quadrature').value
            self.assertClose(numeric, closed, 1e-8)

    def test_power_closed_forms_match_quadrature(self):
        for f, p in ((AubinTalenti(3, 2.0), 2.0), (Gaussian(4, scale=0.7), 1.5)):
            q = sobolev_conjugate(f.n, p)
            closed = radial_power(f, q, SPEC).value
            numeric = radial_power(f, q, SPEC, method='quadrature').value
            self.assertClose(numeric, closed, 1e-8)

    def test_energy_only_known_at_the_own_exponent(self):
        self.assertIsNone(AubinTalenti(3, 2.0).energy_closed_form(1.5))
        self.assertIsNotNone(Gaussian(3).energy_closed_form(1.5))

    def test_mollified_ball_energy(self):
        f = MollifiedBall(3, width=0.1)
        self.assertAlmostEqual(f.energy_closed_form(1.0), (1.1 ** 3 - 1.0) / 0.3, places=12)


class DescriptionTests(SimpleTestCase):
    def test_parse_kinds(self):
        self.assertIsInstance(profile_from_dict({'kind': 'gaussian', 'n': 3}), Gaussian)
        self.assertIsInstance(profile_from_dict({'kind': 'aubin_talenti', 'n': 4, 'p': 1.5}), AubinTalenti)
        f = profile_from_dict({'kind': 'char_of_body', 'body': {'kind': 'cube'}})
        self.assertIsInstance(f, CharOfBody)
        self.assertIsInstance(f.body, Polytope)
        self.assertEqual(f.n, 3)

    def test_description_survives_serialization(self):
        f = AffineExtremizer(3, 2.0, a=0.3, matrix=np.diag([1.0, 2.0, 0.5]), x0=[0.1, 0.2, 0.3], amplitude=4.0)
        g = profile_from_dict(profile_to_dict(f))
        x = np.array([0.5, 0.5, -1.0])
        self.assertEqual(g.evaluate(x), f.evaluate(x))

    def test_bad_descriptions_are_configuration_errors(self):
        bad = [
            {'n': 3},
            {'kind': 'gaussian'},
            {'kind': 'aubin_talenti', 'n': 3, 'p': 3.0},
            {'kind': 'affine_extremizer', 'n': 3, 'p': 2.0, 'matrix': np.zeros((3, 3)).tolist()},
            {'kind': 'gaussian', 'n': 'three'},
            {'kind': 'spline', 'n': 3},
        ]
        for data in bad:
            with self.assertRaises(ConfigurationError, msg=data):
                profile_from_dict(data)

    def test_char_of_body_is_not_serialized(self):
        with self.assertRaises(ConfigurationError):
            profile_to_dict(profile_from_dict({'kind': 'char_of_body', 'body': {'kind': 'ball'}}))
