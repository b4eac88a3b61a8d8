"""
Static graph model: hop distances, diameter, eccentricities and induced
subgraphs. Graphs are immutable once built and safe to share across runs.
"""
import logging
from functools import cached_property

import networkx as nx
import numpy as np

from apps.core.exceptions import ConfigurationError, DisconnectedGraph, SelfLoop

logger = logging.getLogger(__name__)

INDUCED = 'induced'
AMBIENT = 'ambient'
SUBGRAPH_METRICS = (INDUCED, AMBIENT)


def _distance_matrix(nx_graph, order):
    """All-pairs BFS hop distances over `order`; raises on unreachable pairs"""
    position = {node: i for i, node in enumerate(order)}
    dist = np.full((len(order), len(order)), -1, dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(nx_graph):
        row = position[source]
        for target, hops in lengths.items():
            dist[row, position[target]] = hops
    if (dist < 0).any():
        raise DisconnectedGraph(
            f'graph with {len(order)} nodes is not connected; '
            'every node must be reachable from every other node'
        )
    dist.setflags(write=False)
    return dist


class Graph:
    """
    Undirected connected graph over dense node ids 0..N-1.

    `dist` is the all-pairs hop matrix; `metadata` documents how the graph
    was generated (kind, parameters, named clusters).
    """

    def __init__(self, nx_graph, metadata=None):
        self._nx = nx.freeze(nx_graph)
        self.nodes = tuple(range(nx_graph.number_of_nodes()))
        self.edges = frozenset(tuple(sorted(edge)) for edge in nx_graph.edges())
        self.metadata = dict(metadata or {})
        self.label = 'graph'
        self.dist = _distance_matrix(self._nx, self.nodes)

    def __repr__(self):
        return f'Graph(nodes={self.num_nodes}, edges={len(self.edges)}, diameter={self.diameter})'

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def members(self):
        return self.nodes

    @cached_property
    def local_index(self):
        return {node: node for node in self.nodes}

    def __contains__(self, node):
        return 0 <= node < self.num_nodes

    @cached_property
    def eccentricity(self):
        return self.dist.max(axis=1)

    @cached_property
    def diameter(self):
        return int(self.eccentricity.max())

    @cached_property
    def adjacency(self):
        adj = np.zeros((self.num_nodes, self.num_nodes), dtype=bool)
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = True
        adj.setflags(write=False)
        return adj

    def neighbors(self, node):
        return sorted(self._nx.neighbors(node))

    def to_networkx(self):
        return self._nx

    def subgraph(self, node_subset, metric=INDUCED, label=None):
        return Subgraph(self, node_subset, metric=metric, label=label)

    def full_subgraph(self, metric=INDUCED, label='full'):
        return Subgraph(self, self.nodes, metric=metric, label=label)


class Subgraph:
    """
    A connected node subset of a parent graph.

    Local indices follow the sorted order of `members`. With the `induced`
    metric distances are measured inside the induced subgraph and messages
    only travel along induced edges; `ambient` keeps the parent's distances
    and routes over the whole parent graph.
    """

    def __init__(self, parent, node_subset, metric=INDUCED, label=None):
        members = tuple(sorted(set(int(n) for n in node_subset)))
        if not members:
            raise ConfigurationError('subgraph needs at least one node')
        unknown = [n for n in members if n < 0 or n >= parent.num_nodes]
        if unknown:
            raise ConfigurationError(f'subgraph nodes {unknown} are not in the parent graph')
        if metric not in SUBGRAPH_METRICS:
            raise ConfigurationError(f'unknown subgraph metric {metric!r}; use one of {SUBGRAPH_METRICS}')

        self.parent = parent
        self.members = members
        self.node_subset = frozenset(members)
        self.metric = metric
        self.label = label
        self.local_index = {node: i for i, node in enumerate(members)}

        induced = parent.to_networkx().subgraph(members)
        if not nx.is_connected(induced):
            raise DisconnectedGraph(f'induced subgraph on {list(members)} is not connected')

        if metric == INDUCED:
            self.dist = _distance_matrix(induced, members)
        else:
            self.dist = parent.dist[np.ix_(members, members)]
        self.adjacency = parent.adjacency[np.ix_(members, members)]

    def __repr__(self):
        name = self.label or f'{len(self.members)} nodes'
        return f'Subgraph({name}, diameter={self.diameter})'

    def __len__(self):
        return len(self.members)

    def __contains__(self, node):
        return node in self.node_subset

    @cached_property
    def diameter(self):
        return int(self.dist.max())

    @property
    def num_nodes(self):
        return len(self.members)
