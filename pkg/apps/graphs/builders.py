"""
Graph constructors. Node ids are dense integers assigned here and every
artifact refers to them; generator parameters and the numbering scheme are
recorded in `Graph.metadata`.
"""
import logging

import networkx as nx

from apps.core.exceptions import ConfigurationError, SelfLoop

from .topology import Graph

logger = logging.getLogger(__name__)


def parse_edge_list(text):
    """Parse a `u v` per line text block; blank lines and # comments are skipped"""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.replace(',', ' ').split()
        if len(parts) != 2:
            raise ConfigurationError(f'edge list line {lineno}: expected "u v", got {raw!r}')
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ConfigurationError(f'edge list line {lineno}: node ids must be integers') from exc
    return edges


def build_graph(edge_list, num_nodes=None, metadata=None):
    """
    Build a connected graph from node-id pairs.

    Without `num_nodes` the node count is one more than the largest id seen
    (a single node when the edge list is empty).
    """
    edge_list = [(int(u), int(v)) for u, v in edge_list]
    for u, v in edge_list:
        if u < 0 or v < 0:
            raise ConfigurationError(f'edge ({u}, {v}) uses a negative node id')
        if u == v:
            raise SelfLoop(f'edge ({u}, {v}) joins node {u} to itself')

    largest = max((max(u, v) for u, v in edge_list), default=0)
    if num_nodes is None:
        num_nodes = largest + 1
    if num_nodes < 1:
        raise ConfigurationError('a graph needs at least one node')
    if largest >= num_nodes:
        raise ConfigurationError(f'edge endpoint {largest} is outside 0..{num_nodes - 1}')

    nx_graph = nx.Graph()
    nx_graph.add_nodes_from(range(num_nodes))
    nx_graph.add_edges_from(edge_list)

    meta = {'kind': 'edges'}
    meta.update(metadata or {})
    graph = Graph(nx_graph, meta)
    logger.debug('built %r', graph)
    return graph


def path_graph(num_nodes):
    if num_nodes < 1:
        raise ConfigurationError('path needs at least one node')
    edges = [(i, i + 1) for i in range(num_nodes - 1)]
    return build_graph(edges, num_nodes=num_nodes, metadata={'kind': 'path', 'num_nodes': num_nodes})


def star_graph(leaves):
    """Hub 0 with leaves 1..leaves"""
    if leaves < 1:
        raise ConfigurationError('star needs at least one leaf')
    edges = [(0, leaf) for leaf in range(1, leaves + 1)]
    return build_graph(edges, num_nodes=leaves + 1, metadata={'kind': 'star', 'leaves': leaves})


def two_cluster_graph(cluster_leaves, connector_length):
    """
    Two stars joined by a line.

    Numbering: hub A is 0 with leaves 1..l, connector nodes follow
    (l+1..l+L), then hub B (l+L+1) and its leaves. With l leaves and L
    connector nodes the graph has 2(l+1)+L nodes.
    """
    if cluster_leaves < 1:
        raise ConfigurationError('cluster_leaves must be at least 1')
    if connector_length < 1:
        raise ConfigurationError('connector_length must be at least 1')

    hub_a = 0
    leaves_a = list(range(1, cluster_leaves + 1))
    connector = list(range(cluster_leaves + 1, cluster_leaves + connector_length + 1))
    hub_b = cluster_leaves + connector_length + 1
    leaves_b = list(range(hub_b + 1, hub_b + cluster_leaves + 1))

    edges = [(hub_a, leaf) for leaf in leaves_a]
    line = [hub_a] + connector + [hub_b]
    edges += list(zip(line, line[1:]))
    edges += [(hub_b, leaf) for leaf in leaves_b]

    metadata = {
        'kind': 'two_cluster',
        'cluster_leaves': cluster_leaves,
        'connector_length': connector_length,
        'clusters': [[hub_a] + leaves_a, [hub_b] + leaves_b],
        'connector': connector,
    }
    return build_graph(edges, num_nodes=hub_b + cluster_leaves + 1, metadata=metadata)


def embedded_clusters_graph(spokes=12, layers=3):
    """
    Concentric rings of `spokes` nodes, one ring per layer, with consecutive
    layers joined along each spoke. Node id = layer * spokes + spoke.

    Two clusters sit around opposite spokes: every layer of the spoke itself
    plus the middle-layer nodes of the two adjacent spokes.
    """
    if spokes < 6:
        raise ConfigurationError('embedded clusters need at least 6 spokes')
    if layers < 1:
        raise ConfigurationError('embedded clusters need at least 1 layer')

    def node(layer, spoke):
        return layer * spokes + spoke % spokes

    edges = []
    for layer in range(layers):
        edges += [(node(layer, s), node(layer, s + 1)) for s in range(spokes)]
    for layer in range(layers - 1):
        edges += [(node(layer, s), node(layer + 1, s)) for s in range(spokes)]

    middle = layers // 2

    def cluster(spoke):
        members = {node(layer, spoke) for layer in range(layers)}
        members |= {node(middle, spoke - 1), node(middle, spoke + 1)}
        return sorted(members)

    metadata = {
        'kind': 'embedded_clusters',
        'spokes': spokes,
        'layers': layers,
        'clusters': [cluster(0), cluster(spokes // 2)],
    }
    return build_graph(edges, num_nodes=spokes * layers, metadata=metadata)


def graph_from_config(spec):
    """Build a graph from the `graph` section of an experiment config"""
    kind = spec['kind']
    if kind == 'edges':
        edges = spec.get('edges')
        if isinstance(edges, str):
            edges = parse_edge_list(edges)
        return build_graph(edges or [], num_nodes=spec.get('num_nodes'))
    if kind == 'path':
        return path_graph(spec['num_nodes'])
    if kind == 'star':
        return star_graph(spec['leaves'])
    if kind == 'two_cluster':
        return two_cluster_graph(spec['cluster_leaves'], spec['connector_length'])
    if kind == 'embedded_clusters':
        return embedded_clusters_graph(spec.get('spokes', 12), spec.get('layers', 3))
    raise ConfigurationError(f'unknown graph kind {kind!r}')
