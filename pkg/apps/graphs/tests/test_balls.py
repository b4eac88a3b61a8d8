from django.test import SimpleTestCase

import networkx as nx

from apps.graphs.balls import ball_collection, ball_radii
from apps.graphs.builders import build_graph, path_graph, two_cluster_graph


class BallCollectionTests(SimpleTestCase):

    def test_path_of_three_before_dedup(self):
        graph = path_graph(3)
        self.assertEqual(list(graph.eccentricity), [2, 1, 2])
        balls = ball_collection(graph, 'all', deduplicate=False)
        self.assertEqual(len(balls), 8)

    def test_path_of_three_after_dedup(self):
        sets = {ball.node_subset for ball in ball_collection(path_graph(3), 'all')}
        expected = {frozenset(s) for s in ({0}, {1}, {2}, {0, 1}, {1, 2}, {0, 1, 2})}
        self.assertEqual(sets, expected)

    def test_single_node(self):
        balls = ball_collection(build_graph([]), 'all')
        self.assertEqual(len(balls), 1)
        self.assertEqual(balls[0].members, (0,))

    def test_full_graph_and_cardinality(self):
        graph = two_cluster_graph(3, 4)
        balls = ball_collection(graph, 'all')
        self.assertIn(frozenset(graph.nodes), {b.node_subset for b in balls})
        bound = graph.num_nodes + int(graph.eccentricity.sum())
        self.assertLessEqual(len(ball_collection(graph, 'all', deduplicate=False)), bound)
        self.assertLessEqual(len(balls), graph.num_nodes * (1 + graph.num_nodes))

    def test_every_ball_is_connected(self):
        graph = two_cluster_graph(3, 5)
        nx_graph = graph.to_networkx()
        for ball in ball_collection(graph, 'dyadic'):
            self.assertTrue(nx.is_connected(nx_graph.subgraph(ball.members)))

    def test_dyadic_radii(self):
        self.assertEqual(ball_radii(0, 'dyadic'), [0])
        self.assertEqual(ball_radii(1, 'dyadic'), [0])
        self.assertEqual(ball_radii(9, 'dyadic'), [0, 2, 4, 8])
