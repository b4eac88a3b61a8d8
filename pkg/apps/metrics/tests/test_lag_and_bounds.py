import math

import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import MissingMetadata
from apps.graphs.builders import path_graph
from apps.metrics.bounds import (
    bound_evaluator, direction_ceiling, full_stack_bound, decoded_lag_holds, scale_learner_bound,
)
from apps.metrics.lag import LagTracker, lag, lag_ceiling
from apps.transport.knowledge import NodeKnowledge


class LagTests(SimpleTestCase):

    def test_two_rounds(self):
        self.assertEqual(lag([1.0, 2.0], [[], [0]]), 9.0)

    def test_no_delays(self):
        norms = [0.5, 1.5, 2.0]
        self.assertAlmostEqual(lag(norms, [[], [], []]), 0.25 + 2.25 + 4.0)

    def test_tracker_within_ceiling(self):
        rng = np.random.default_rng(4)
        graph = path_graph(6)
        knowledge = NodeKnowledge(graph)
        tracker = LagTracker(knowledge)
        norms, gammas = [], []
        T = 200
        for t in range(1, T + 1):
            node = int(rng.integers(6))
            position = knowledge.register(t, node)
            g = rng.normal(size=2)
            g /= max(1.0, np.linalg.norm(g))
            tracker.record(position, g, g, float(g[0]))
            norms.append(float(np.linalg.norm(g)))
            gammas.append(knowledge.missing_at_issue(position))
            self.assertLessEqual(len(gammas[-1]), graph.diameter)
        self.assertAlmostEqual(tracker.true_lag, lag(norms, gammas), delta=1e-9)
        self.assertAlmostEqual(tracker.decoded_lag, tracker.true_lag, delta=1e-9)
        self.assertLessEqual(tracker.true_lag, lag_ceiling(1.0, graph.diameter, T))

    def test_decoded_lag_ceiling(self):
        rng = np.random.default_rng(9)
        eps, T = 0.05, 100
        knowledge = NodeKnowledge(path_graph(4))
        tracker = LagTracker(knowledge)
        for t in range(1, T + 1):
            node = int(rng.integers(4))
            g = rng.normal(size=3)
            g /= max(1.0, np.linalg.norm(g))
            noise = rng.normal(size=3)
            g_hat = g + eps * noise / np.linalg.norm(noise)
            tracker.record(knowledge.register(t, node), g, g_hat, 0.0)
        self.assertTrue(decoded_lag_holds(tracker.true_lag, tracker.decoded_lag, eps, 1.0, 3, T))


class BoundTests(SimpleTestCase):

    params = {
        'nu': 1.0, 'eps': 0.01, 'grad_bound': 1.01, 'G': 1.0, 'delay_bound': 4, 'T': 1000,
        'lag': 900.0, 'lag_hat': 950.0, 'lag_h': 500.0, 'dim': 2, 'bit_budget': 40,
    }

    def test_null_comparator_gives_nu(self):
        for key in ('B1', 'B8', 'T5'):
            self.assertEqual(bound_evaluator(key, self.params, 0.0).value, 1.0)

    def test_scale_bound_matches_formula(self):
        u = 10.0
        D, G, T, eps = 4, 1.01, 1000, 0.01
        expected = 1.0 + 2 * u * T * eps + u * max(
            264 * G * D * math.log(max(math.e, 312 * u * G * D)),
            math.sqrt(8 * (500.0 + 24 * T * G * eps + 1) * math.log(max(math.e, 2036 * u * u * T * D * G * G))),
        )
        self.assertAlmostEqual(scale_learner_bound(u, 1.0, eps, G, D, T, 500.0), expected)
        self.assertAlmostEqual(bound_evaluator('B1', self.params, u).value, expected)

    def test_deterministic_coding_term_is_order_one(self):
        T, d, D, G = 1024, 2, 3, 1.0
        b = d * D * math.log2(T)
        params = dict(self.params, lag=0.0, T=T, dim=d, delay_bound=D, bit_budget=b, nu=0.0)
        bound = bound_evaluator('T3', params, 1.0)
        self.assertTrue(bound.order_level)
        self.assertAlmostEqual(bound.value, G)

    def test_t2_is_the_full_stack_bound(self):
        self.assertEqual(bound_evaluator('T2', self.params, 3.0).value,
                         full_stack_bound(3.0, 1.0, 0.01, 1.0, 4, 1000, 900.0))

    def test_direction_ceiling(self):
        self.assertAlmostEqual(direction_ceiling(0.0, 1.0, 2, 100, 16.0), 16 + 24)

    def test_partition_bounds(self):
        cells = [{'u_norm': 1.0, 'lag': 100.0, 'diameter': 2, 'rounds': 50},
                 {'u_norm': 0.0, 'lag': 10.0, 'diameter': 1, 'rounds': 50}]
        params = dict(self.params, cells=cells, collection_size=3, collection_diameter=4)
        t6 = bound_evaluator('T6', params)
        expected = math.sqrt(100.0 * math.log(1 + 3 * 2 * 50)) + 2.0 ** (-40 / 8) * 50
        self.assertAlmostEqual(t6.value, expected)
        self.assertGreater(bound_evaluator('T7', params).value, 0.0)

    def test_missing_metadata(self):
        with self.assertRaises(MissingMetadata):
            bound_evaluator('B1', {'nu': 1.0}, 1.0)
        with self.assertRaises(MissingMetadata):
            bound_evaluator('T6', self.params, 1.0)
