import numpy as np
from django.test import SimpleTestCase

from apps.adversary.scenarios import (
    Scenario, attack_expected_regret, encoding_attack_scenario, grid_collision, random_scenario,
    scenario_from_config, sign_sequence_scenario, two_cluster_scenario, worst_delay_cycle, worst_delay_scenario,
)
from apps.core.exceptions import ConfigurationError, MissingMetadata, NoCollisionFound, NormExceeded
from apps.encoding.coders import decode_deterministic, encode_deterministic
from apps.encoding.specs import EncoderSpec
from apps.graphs.builders import build_graph, embedded_clusters_graph, path_graph, two_cluster_graph
from apps.metrics.export import staleness_profile
from apps.transport.forwarding import ForwardingSimulator
from apps.transport.records import GradientRecord


def replay_transport(graph, scenario):
    simulator = ForwardingSimulator(graph)
    for t, node, g in scenario.rounds():
        simulator.step_forwarding(t, node, GradientRecord(t, node, g, '', g))
    return simulator.trace


class ScenarioTests(SimpleTestCase):

    def test_norm_assertion(self):
        with self.assertRaises(NormExceeded):
            Scenario('random', 0, [0], [[2.0, 0.0]], 1.0)
        with self.assertRaises(ConfigurationError):
            Scenario('random', 0, [0, 0], [[0.0, 0.0]], 1.0)

    def test_random_is_reproducible(self):
        graph = path_graph(6)
        first = random_scenario(graph, 200, 3, 2.0, seed=5)
        second = random_scenario(graph, 200, 3, 2.0, seed=5)
        np.testing.assert_array_equal(first.gradients, second.gradients)
        np.testing.assert_array_equal(first.activations, second.activations)
        self.assertFalse(np.array_equal(first.gradients, random_scenario(graph, 200, 3, 2.0, seed=6).gradients))
        self.assertTrue(np.all(np.linalg.norm(first.gradients, axis=1) <= 2.0))
        self.assertTrue(set(first.activations.tolist()) <= set(graph.nodes))

    def test_from_config(self):
        graph = two_cluster_graph(2, 3)
        scenario = scenario_from_config({'tag': 'two_cluster', 'bias': 0.25}, graph, 10, 2, 1.0, 0)
        self.assertEqual(scenario.descriptor(), {'tag': 'two_cluster', 'seed': 0, 'params': {'bias': 0.25, 'block': 8}})
        with self.assertRaises(ConfigurationError):
            scenario_from_config({'tag': 'chaos'}, graph, 10, 2, 1.0, 0)
        with self.assertRaises(ConfigurationError):
            scenario_from_config({'tag': 'encoding_attack'}, graph, 10, 2, 1.0, 0)
        with self.assertRaises(ConfigurationError):
            scenario_from_config({'tag': 'sign_sequence', 'node': 99}, graph, 10, 2, 1.0, 0)


class TwoClusterScenarioTests(SimpleTestCase):

    def setUp(self):
        self.graph = two_cluster_graph(8, 20)
        self.clusters = self.graph.metadata['clusters']

    def test_connector_never_active(self):
        scenario = two_cluster_scenario(self.graph, 2000, 2, 1.0, seed=3)
        active = set(scenario.activations.tolist())
        self.assertFalse(active & set(self.graph.metadata['connector']))
        self.assertTrue(active <= set(self.clusters[0]) | set(self.clusters[1]))

    def test_blocks_alternate_clusters(self):
        scenario = two_cluster_scenario(self.graph, 100, 2, 1.0, seed=11, block=8)
        for t, node in enumerate(scenario.activations.tolist()):
            self.assertIn(node, self.clusters[(t // 8) % 2])

    def test_signs_constant_per_block(self):
        scenario = two_cluster_scenario(self.graph, 101, 2, 1.0, seed=5, block=4)
        for start in range(0, 101, 4):
            rows = scenario.gradients[start:start + 4]
            self.assertTrue(np.all(rows == rows[0]))
        np.testing.assert_allclose(np.linalg.norm(scenario.gradients, axis=1), 1.0)

    def test_full_bias_points_against_cluster_direction(self):
        scenario = two_cluster_scenario(self.graph, 64, 2, 2.0, seed=2, bias=1.0)
        in_first = np.isin(scenario.activations, self.clusters[0])
        np.testing.assert_array_equal(scenario.gradients[in_first], np.tile([-2.0, 0.0], (in_first.sum(), 1)))
        np.testing.assert_array_equal(scenario.gradients[~in_first], np.tile([2.0, 0.0], ((~in_first).sum(), 1)))

    def test_unbiased_signs(self):
        scenario = two_cluster_scenario(self.graph, 8000, 2, 1.0, seed=7, block=8)
        in_first = np.isin(scenario.activations, self.clusters[0])
        # +e1 gradients in the first cluster mean a negative sign
        positive = np.where(in_first, scenario.gradients[:, 0] < 0, scenario.gradients[:, 0] > 0)[::8]
        self.assertLess(abs(positive.mean() - 0.5), 4 * np.sqrt(0.25 / len(positive)))

    def test_stream_ignores_connector_length(self):
        short, long = two_cluster_graph(8, 2), two_cluster_graph(8, 200)
        first = two_cluster_scenario(short, 500, 2, 1.0, seed=4)
        second = two_cluster_scenario(long, 500, 2, 1.0, seed=4)
        np.testing.assert_array_equal(first.gradients, second.gradients)

        def positions(graph, scenario):
            clusters = graph.metadata['clusters']
            return [clusters[(t // 8) % 2].index(node) for t, node in enumerate(scenario.activations.tolist())]

        self.assertEqual(positions(short, first), positions(long, second))

    def test_missing_gradients_grow_with_connector(self):
        means = {}
        for length in (2, 40):
            graph = two_cluster_graph(8, length)
            trace = replay_transport(graph, two_cluster_scenario(graph, 400, 2, 1.0, seed=0))
            means[length] = np.mean([row.missing for row in trace])
        self.assertLess(means[2], 4)
        self.assertGreater(means[40], 15)

    def test_empty_and_embedded(self):
        self.assertEqual(len(two_cluster_scenario(self.graph, 0, 2, 1.0, seed=0)), 0)
        graph = embedded_clusters_graph(8, 3)
        scenario = two_cluster_scenario(graph, 100, 2, 1.0, seed=0)
        clusters = graph.metadata['clusters']
        self.assertTrue(set(scenario.activations.tolist()) <= set(clusters[0]) | set(clusters[1]))

    def test_needs_clusters(self):
        with self.assertRaises(MissingMetadata):
            two_cluster_scenario(path_graph(4), 10, 2, 1.0, seed=0)
        with self.assertRaises(ConfigurationError):
            two_cluster_scenario(self.graph, 10, 2, 1.0, seed=0, bias=1.5)
        with self.assertRaises(ConfigurationError):
            two_cluster_scenario(self.graph, 10, 2, 1.0, seed=0, block=0)


class WorstDelayScenarioTests(SimpleTestCase):

    def test_cycle(self):
        self.assertEqual(worst_delay_cycle(path_graph(5)), [0, 2])
        self.assertEqual(worst_delay_cycle(path_graph(11)), [0, 2, 4, 6, 8])
        self.assertEqual(worst_delay_cycle(build_graph([(0, 1)])), [0])

    def test_signs_constant_per_cycle(self):
        scenario = worst_delay_scenario(path_graph(11), 53, 2, 1.0, seed=1)
        signs = scenario.gradients[:, 0]
        for start in range(0, 53, 5):
            self.assertEqual(len(set(signs[start:start + 5].tolist())), 1)
        np.testing.assert_allclose(np.abs(signs), 1.0)

    def test_staleness_is_half_the_diameter(self):
        for n in (5, 11):
            graph = path_graph(n)
            scenario = worst_delay_scenario(graph, 60, 1, 1.0, seed=0)
            trace = replay_transport(graph, scenario)
            self.assertEqual(staleness_profile(trace, warmup=len(worst_delay_cycle(graph))), (n - 1) // 2)

    def test_short_path_staleness_every_round(self):
        graph = path_graph(5)
        trace = replay_transport(graph, worst_delay_scenario(graph, 20, 1, 1.0, seed=0))
        self.assertEqual({row.staleness for row in trace[2:]}, {2})


class EncodingAttackTests(SimpleTestCase):

    def setUp(self):
        self.spec = EncoderSpec.deterministic(1, 1.0, 2)

    def test_grid_collision(self):
        g, h, gap = grid_collision(self.spec)
        self.assertEqual(encode_deterministic(g, self.spec), encode_deterministic(h, self.spec))
        self.assertAlmostEqual(gap, 0.5, delta=1e-5)

    def test_collision_in_higher_dimension(self):
        spec = EncoderSpec.deterministic(4, 1.0, 8)
        g, h, gap = grid_collision(spec)
        self.assertEqual(encode_deterministic(g, spec), encode_deterministic(h, spec))
        self.assertLessEqual(np.linalg.norm(h), 1.0)
        self.assertGreater(gap, 0.9)

    def test_resolution_too_fine(self):
        with self.assertRaises(NoCollisionFound):
            grid_collision(EncoderSpec.deterministic(1, 1.0, 52))

    def test_variants_share_payloads(self):
        first = encoding_attack_scenario(self.spec, 300, seed=4, variant='g')
        second = encoding_attack_scenario(self.spec, 300, seed=4, variant='h')
        self.assertEqual([encode_deterministic(x, self.spec) for x in first.gradients],
                         [encode_deterministic(x, self.spec) for x in second.gradients])
        g, h = first.extra['pair']
        mixed = -(g + h) / 2
        for x in first.gradients:
            self.assertTrue(np.array_equal(x, g) or np.array_equal(x, mixed))
        self.assertEqual(set(first.activations.tolist()), {0})

    def test_conditional_floor(self):
        rng = np.random.default_rng(0)
        g, h, gap = grid_collision(self.spec)
        for _ in range(20):
            w_sum = rng.normal(scale=100.0, size=1)
            with_g, with_h = attack_expected_regret(g, h, w_sum, 1000, 3.0)
            self.assertGreaterEqual(max(with_g, with_h), 1000 / 4 * gap * 3.0 - 1e-9)
            self.assertAlmostEqual(with_g + with_h, 1000 / 2 * gap * 3.0, delta=1e-6)

    def test_oblivious_learner_suffers_linear_regret(self):
        T, seeds, u_norm, rate = 1000, 50, 1.0, 0.01
        regrets = {'g': [], 'h': []}
        for seed in range(seeds):
            for variant in ('g', 'h'):
                scenario = encoding_attack_scenario(self.spec, T, seed=seed, variant=variant)
                g, h = scenario.extra['pair']
                decoded = np.array([decode_deterministic(encode_deterministic(x, self.spec), self.spec)
                                    for x in scenario.gradients])
                w = -rate * np.vstack([np.zeros((1, 1)), np.cumsum(decoded, axis=0)[:-1]])
                aligned = u_norm * (h - g) / np.linalg.norm(h - g)
                u = aligned if variant == 'g' else -aligned
                regrets[variant].append(float(np.einsum('td,td->', w - u, scenario.gradients)))
        gap = np.linalg.norm(h - g)
        floor = T / 4 * gap * u_norm
        self.assertGreaterEqual(max(np.mean(regrets['g']), np.mean(regrets['h'])), 0.9 * floor)


class SignSequenceTests(SimpleTestCase):

    def test_norms_and_best_comparator(self):
        scenario = sign_sequence_scenario(500, 3, 2.0, seed=9, direction=[0.0, 3.0, 4.0])
        np.testing.assert_allclose(np.linalg.norm(scenario.gradients, axis=1), 2.0)
        direction = np.array([0.0, 0.6, 0.8])
        total = scenario.gradients.sum(axis=0)
        u = -np.sign(total @ direction) * 5.0 * direction
        self.assertAlmostEqual(float(total @ u), -abs(float(total @ direction)) * 5.0)

    def test_mean_band(self):
        T, seeds = 400, 200
        sums = [sign_sequence_scenario(T, 1, 1.0, seed=s).gradients.sum() for s in range(seeds)]
        self.assertLess(abs(np.mean(sums)), 3 * np.sqrt(T) / np.sqrt(seeds))
