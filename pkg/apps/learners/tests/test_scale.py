import math

import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError, DuplicateGradient
from apps.graphs.builders import build_graph, path_graph
from apps.learners.integrals import ln_plus
from apps.learners.scale import ScaleLearner, integration_limit
from apps.transport.knowledge import NodeKnowledge


def run_scalar_trace(graph, feedback, truth, activations, eps, grad_bound, a_multiplier=1.0, nu=1.0):
    """Play a scale learner on a fixed scalar stream; returns (v, potentials)"""
    knowledge = NodeKnowledge(graph)
    learner = ScaleLearner(knowledge, nu, eps, grad_bound, graph.diameter, a_multiplier, cross_check=False)
    predictions = []
    potentials = [learner.potential()]
    for t, (node, h_hat) in enumerate(zip(activations, feedback), start=1):
        predictions.append(learner.predict(knowledge.view(node, t)))
        learner.update(knowledge.register(t, node), h_hat)
        potentials.append(learner.potential())
    return np.asarray(predictions), np.asarray(potentials)


def random_scalar_trace(rng, graph, T, eps, grad_bound):
    activations = rng.integers(graph.num_nodes, size=T)
    truth = rng.uniform(-grad_bound, grad_bound, size=T)
    noise = rng.choice([-eps, eps], size=T) * rng.choice([1.0, rng.random()], size=T)
    feedback = np.clip(truth + noise, -grad_bound, grad_bound)
    return activations, feedback, truth


class TuningTests(SimpleTestCase):

    def test_integration_limit(self):
        self.assertAlmostEqual(integration_limit(1.0, 0.0, 0), 1 / 20)
        self.assertAlmostEqual(integration_limit(0.9, 0.1, 2), 1 / 100)
        self.assertAlmostEqual(integration_limit(1.0, 0.0, 2, a_multiplier=2.0), 2 / 100)

    def test_degenerate_limit_is_a_configuration_error(self):
        with self.assertRaises(ConfigurationError):
            integration_limit(math.inf, 0.0, 1)
        with self.assertRaises(ConfigurationError):
            integration_limit(1e300, 0.0, 10)

    def test_rejects_negative_prior(self):
        with self.assertRaises(ConfigurationError):
            ScaleLearner(NodeKnowledge(path_graph(2)), -1.0, 0.0, 1.0, 1)


class ScaleLearnerTests(SimpleTestCase):

    def test_duplicate_feedback(self):
        knowledge = NodeKnowledge(path_graph(2))
        learner = ScaleLearner(knowledge, 1.0, 0.0, 1.0, 1)
        position = knowledge.register(1, 0)
        learner.update(position, 0.5)
        with self.assertRaises(DuplicateGradient):
            learner.update(position, 0.5)

    def test_prediction_depends_only_on_available_gradients(self):
        knowledge = NodeKnowledge(path_graph(4))
        learner = ScaleLearner(knowledge, 1.0, 0.0, 1.0, 3)
        learner.update(knowledge.register(1, 3), -1.0)
        before = learner.predict(knowledge.view(0, 2))
        self.assertEqual(before, learner.predict(knowledge.view(0, 3)))
        self.assertGreater(learner.predict(knowledge.view(0, 4)), before)

    def test_zeta_grows_when_a_missing_gradient_arrives(self):
        knowledge = NodeKnowledge(path_graph(3))
        learner = ScaleLearner(knowledge, 1.0, 0.1, 1.0, 2)
        learner.update(knowledge.register(1, 0), 0.4)
        learner.update(knowledge.register(2, 2), -0.2)
        before = learner.totals(knowledge.view(2, 2))
        after = learner.totals(knowledge.view(2, 3))
        self.assertAlmostEqual(after.cross - before.cross, abs(-0.2 + 0.1) * abs(0.4 + 0.1))

    def test_cross_check_agrees(self):
        rng = np.random.default_rng(1)
        graph = path_graph(4)
        knowledge = NodeKnowledge(graph)
        learner = ScaleLearner(knowledge, 1.0, 0.01, 1.0, graph.diameter, cross_check=True)
        for t in range(1, 50):
            node = int(rng.integers(4))
            self.assertGreaterEqual(learner.predict(knowledge.view(node, t)), 0.0)
            learner.update(knowledge.register(t, node), float(rng.uniform(-1, 1)))


class PotentialTests(SimpleTestCase):

    def check_trace(self, graph, seed, eps, T=400, grad_bound=1.0):
        rng = np.random.default_rng(seed)
        activations, feedback, truth = random_scalar_trace(rng, graph, T, eps, grad_bound)
        v, potentials = run_scalar_trace(graph, feedback, truth, activations, eps, grad_bound)
        self.assertTrue(np.all(v >= 0))
        decrease = potentials[:-1] - v * truth - potentials[1:]
        slack = 1e-9 * np.maximum(1.0, np.abs(potentials[:-1]))
        self.assertTrue(np.all(decrease >= -slack), f'worst decrease {decrease.min()}')
        self.assertLessEqual(float(v @ truth), 1.0 + 1e-9)
        return v, truth

    def test_null_comparator_and_potential_decrease(self):
        for seed, (size, eps) in enumerate([(2, 0.0), (5, 0.0), (5, 0.01), (17, 0.01)]):
            self.check_trace(path_graph(size), seed, eps)

    def test_full_information_has_no_corrections(self):
        graph = build_graph([], num_nodes=1)
        self.check_trace(graph, 99, 0.0, T=300)

    def test_feedback_at_minus_eps_keeps_potential(self):
        graph = path_graph(3)
        eps = 0.05
        feedback = np.full(30, -eps)
        _, potentials = run_scalar_trace(graph, feedback, feedback, np.zeros(30, dtype=int), eps, 1.0)
        np.testing.assert_allclose(potentials, 1.0, rtol=1e-12)

    def test_regret_below_explicit_ceiling(self):
        rng = np.random.default_rng(17)
        graph = path_graph(5)
        eps, grad_bound, T, nu = 0.0, 1.0, 400, 1.0
        activations, feedback, truth = random_scalar_trace(rng, graph, T, eps, grad_bound)
        v, _ = run_scalar_trace(graph, feedback, truth, activations, eps, grad_bound)
        D = max(graph.diameter, 1)
        knowledge = NodeKnowledge(graph)
        lag = 0.0
        for t, node in enumerate(activations, start=1):
            position = knowledge.register(t, node)
            missing = knowledge.missing_at_issue(position)
            lag += truth[t - 1] ** 2 + 2 * abs(truth[t - 1]) * np.abs(truth[missing]).sum()
        for u in (0.0, 0.1, 1.0, 10.0, 100.0):
            regret = float((v - u) @ truth)
            if u == 0.0:
                ceiling = nu
            else:
                ceiling = nu + 2 * u * T * eps + u * max(
                    264 * grad_bound * D * ln_plus(312 * u * grad_bound * D / nu),
                    math.sqrt(8 * (lag + 24 * T * grad_bound * eps + 1)
                              * ln_plus(2036 * u ** 2 * T * D * grad_bound ** 2 / nu ** 2)),
                )
            self.assertLessEqual(regret, ceiling + 1e-9, f'u={u}')

    def test_overlarge_limit_breaks_potential_decrease(self):
        graph = build_graph([], num_nodes=1)
        feedback = np.ones(1)
        v, potentials = run_scalar_trace(graph, feedback, feedback, [0], 0.0, 1.0, a_multiplier=200.0)
        self.assertGreater(potentials[1] - (potentials[0] - v[0] * feedback[0]), 1e-3)
