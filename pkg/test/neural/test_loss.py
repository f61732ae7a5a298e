from unittest import TestCase

import numpy as np

from neural.loss import pseudo_huber, squared_error


class TestPseudoHuber(TestCase):

    def test_zero_at_target(self):
        loss, grad = pseudo_huber(2.5, 2.5)
        self.assertEqual(0.0, loss)
        self.assertEqual(0.0, grad)

    def test_quadratic_near_zero(self):
        loss, grad = pseudo_huber(1e-3, 0.0)
        self.assertAlmostEqual(0.5e-6, float(loss), delta=1e-12)
        self.assertAlmostEqual(1e-3, float(grad), delta=1e-9)

    def test_linear_far_away(self):
        delta = 2.0
        loss, grad = pseudo_huber(1000.0, 0.0, delta)
        self.assertAlmostEqual(delta * 1000.0 - delta ** 2, float(loss), delta=1e-2)
        self.assertAlmostEqual(delta, float(grad), delta=1e-5)

    def test_gradient_is_bounded_and_odd(self):
        e = np.linspace(-50, 50, 201)
        _, grad = pseudo_huber(e, 0.0)
        self.assertTrue(np.all(np.abs(grad) < 1.0))
        np.testing.assert_allclose(grad, -grad[::-1])

    def test_gradient_matches_finite_difference(self):
        e = np.array([-3.0, -0.2, 0.7, 4.0])
        _, grad = pseudo_huber(e, 0.0, 1.5)
        h = 1e-6
        numeric = (pseudo_huber(e + h, 0.0, 1.5)[0] - pseudo_huber(e - h, 0.0, 1.5)[0]) / (2 * h)
        np.testing.assert_allclose(numeric, grad, rtol=1e-6)

    def test_non_positive_delta(self):
        self.assertRaises(ValueError, lambda: pseudo_huber(1.0, 0.0, 0.0))

    def test_squared_error(self):
        loss, grad = squared_error(np.array([1.0, -2.0]), np.array([0.0, 1.0]))
        np.testing.assert_array_equal([1.0, 9.0], loss)
        np.testing.assert_array_equal([2.0, -6.0], grad)
