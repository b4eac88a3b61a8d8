import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError, ProtocolViolation
from apps.encoding.specs import EncoderSpec
from apps.graphs.builders import path_graph
from apps.learners.stack import (
    COMPARATOR_ADAPTIVE, OGD, ComparatorAdaptiveStack, blackbox_combine, make_stack, scale_tuning,
)
from apps.transport.knowledge import NodeKnowledge


class CombineTests(SimpleTestCase):

    def test_combine(self):
        np.testing.assert_allclose(blackbox_combine(2.0, np.array([0.6, 0.8])), [1.2, 1.6])

    def test_zero_scale(self):
        np.testing.assert_array_equal(blackbox_combine(0.0, np.array([0.6, 0.8])), [0.0, 0.0])

    def test_negative_scale(self):
        with self.assertRaises(ProtocolViolation):
            blackbox_combine(-1.0, np.array([1.0]))

    def test_tuning_per_encoder(self):
        deterministic = EncoderSpec.deterministic(4, 1.0, 16)
        self.assertEqual(scale_tuning(deterministic), (0.125, 1.125))
        stochastic = EncoderSpec.stochastic(4, 1.0, 12)
        self.assertEqual(scale_tuning(stochastic), (0.0, 8.0))
        self.assertEqual(scale_tuning(stochastic, eps=0.5, grad_bound=3.0), (0.5, 3.0))


class ComparatorAdaptiveStackTests(SimpleTestCase):

    def setUp(self):
        self.graph = path_graph(5)
        self.knowledge = NodeKnowledge(self.graph)
        self.stack = ComparatorAdaptiveStack(self.knowledge, 2, nu=1.0, eps=0.0, grad_bound=1.0,
                                             delay_bound=self.graph.diameter)

    def test_feedback_order(self):
        with self.assertRaises(ProtocolViolation):
            self.stack.update(0, np.zeros(2))
        self.stack.predict(0, 1)
        with self.assertRaises(ProtocolViolation):
            self.stack.predict(0, 1)

    def test_first_round_plays_zero(self):
        prediction = self.stack.predict(2, 1)
        np.testing.assert_array_equal(prediction.z, np.zeros(2))
        np.testing.assert_array_equal(prediction.w, np.zeros(2))
        self.assertGreater(prediction.v, 0.0)

    def test_regret_decomposition(self):
        rng = np.random.default_rng(12)
        rows = []
        for t in range(1, 300):
            node = int(rng.integers(5))
            prediction = self.stack.predict(node, t)
            g = rng.normal(size=2)
            g /= max(1.0, np.linalg.norm(g))
            self.stack.update(self.knowledge.register(t, node), g)
            rows.append((prediction.w, prediction.v, prediction.z, g))
        for u in (np.array([0.3, -0.4]), np.array([5.0, 1.0])):
            norm = np.linalg.norm(u)
            lhs = sum(float((w - u) @ g) for w, _, _, g in rows)
            scale_part = sum(float(z @ g) * (v - norm) for _, v, z, g in rows)
            direction_part = norm * sum(float((z - u / norm) @ g) for _, _, z, g in rows)
            self.assertAlmostEqual(lhs, scale_part + direction_part, delta=1e-9 * max(1.0, abs(lhs)))

    def test_null_comparator_regret_at_most_nu(self):
        rng = np.random.default_rng(21)
        total = 0.0
        for t in range(1, 400):
            node = int(rng.integers(5))
            prediction = self.stack.predict(node, t)
            g = rng.uniform(-1, 1, size=2) / np.sqrt(2)
            self.stack.update(self.knowledge.register(t, node), g)
            total += float(prediction.w @ g)
        self.assertLessEqual(total, 1.0 + 1e-9)


class OGDStackTests(SimpleTestCase):

    def test_plays_negative_scaled_sum(self):
        knowledge = NodeKnowledge(path_graph(1))
        stack = make_stack(OGD, knowledge, 1, learning_rate=0.1)
        np.testing.assert_array_equal(stack.predict(0, 1).w, [0.0])
        stack.update(knowledge.register(1, 0), np.array([1.0]))
        stack.predict(0, 2)
        stack.update(knowledge.register(2, 0), np.array([2.0]))
        prediction = stack.predict(0, 3)
        np.testing.assert_allclose(prediction.w, [-0.3])
        self.assertAlmostEqual(prediction.v, 0.3)
        np.testing.assert_allclose(prediction.z, [-1.0])


class FactoryTests(SimpleTestCase):

    def test_defaults_delay_bound_to_domain_diameter(self):
        knowledge = NodeKnowledge(path_graph(4))
        stack = make_stack(COMPARATOR_ADAPTIVE, knowledge, 3)
        self.assertEqual(stack.scale.delay_bound, 3)

    def test_unknown_kind(self):
        with self.assertRaises(ConfigurationError):
            make_stack('momentum', NodeKnowledge(path_graph(2)), 1)

    def test_ogd_needs_rate(self):
        with self.assertRaises(ConfigurationError):
            make_stack(OGD, NodeKnowledge(path_graph(2)), 1)
