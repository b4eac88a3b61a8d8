import math

import numpy as np
from django.test import SimpleTestCase

from apps.learners.accumulators import DelayedTotals
from apps.learners.integrals import gaussian_moments, ln_plus, normalizer, quadrature_moments, relative_gap
from apps.learners.scale import potential_value, scale_predict


class ClosedFormTests(SimpleTestCase):

    def test_empty_history(self):
        a = 0.05
        v = scale_predict(DelayedTotals(0.0, 0.0, 0.0), nu=1.0, a=a)
        expected = (1 - math.exp(-a * a)) / (2 * normalizer(a))
        self.assertAlmostEqual(v, expected, places=14)

    def test_zero_prior_mass(self):
        totals = DelayedTotals(-3.0, 2.0, 0.5)
        self.assertEqual(scale_predict(totals, nu=0.0, a=0.1), 0.0)
        self.assertEqual(potential_value(totals, nu=0.0, a=0.1), 0.0)

    def test_potential_of_empty_history_is_nu(self):
        self.assertAlmostEqual(potential_value(DelayedTotals(0.0, 0.0, 0.0), nu=2.5, a=0.03), 2.5, places=13)

    def test_matches_quadrature_on_random_states(self):
        rng = np.random.default_rng(2024)
        T = 10_000
        for _ in range(400):
            a = 1 / (20 * (1 + 2 * int(rng.integers(0, 17))))
            L = float(rng.uniform(-T, T)) * float(rng.choice([1e-3, 1e-1, 1.0]))
            V = 1 + L * L / T * (1 + float(rng.exponential()))
            i0, i1 = gaussian_moments(L, V, a)
            q0, q1 = quadrature_moments(L, V, a)
            self.assertLess(relative_gap(i0, q0), 1e-6, f'I0 at L={L}, V={V}, a={a}')
            self.assertLess(relative_gap(i1, q1), 1e-6, f'I1 at L={L}, V={V}, a={a}')

    def test_prediction_is_non_negative(self):
        for L in (-50.0, 0.0, 50.0, 5e3):
            _, i1 = gaussian_moments(L, 1 + L * L, 0.05)
            self.assertGreaterEqual(i1, 0.0)

    def test_ln_plus(self):
        self.assertEqual(ln_plus(0.5), 1.0)
        self.assertAlmostEqual(ln_plus(math.e ** 3), 3.0)
