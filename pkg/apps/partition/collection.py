"""
Candidate subgraph collections Q.
"""
import logging

from apps.core.exceptions import ConfigurationError, MissingMetadata
from apps.graphs.balls import ALL, ball_collection
from apps.graphs.topology import INDUCED

logger = logging.getLogger(__name__)

SINGLE = 'single'
CLUSTERS = 'clusters'
EXPLICIT = 'explicit'
BALLS = 'balls'
COLLECTION_MODES = (SINGLE, CLUSTERS, EXPLICIT, BALLS)

FULL_LABEL = 'full'


class QCollection:
    """
    Subgraphs of one graph, each with its own learner stack in a run.

    `diameter` is D_Q = max(1, max D(F)): the discard horizon and the
    divisor of the bit budget. Each stack gets prior mass nu_total / |Q|.
    """

    def __init__(self, graph, subgraphs, nu_total=1.0):
        subgraphs = list(subgraphs)
        if not subgraphs:
            raise ConfigurationError('a subgraph collection needs at least one subgraph')
        if not nu_total > 0:
            raise ConfigurationError(f'nu_total must be positive, got {nu_total}')
        for i, subgraph in enumerate(subgraphs):
            if subgraph.parent is not graph:
                raise ConfigurationError(f'subgraph {i} belongs to another graph')
            if subgraph.label is None:
                subgraph.label = f'F{i}'
        labels = [s.label for s in subgraphs]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f'subgraph labels must be unique, got {labels}')

        self.graph = graph
        self.subgraphs = subgraphs
        self.nu_total = float(nu_total)
        self.diameter = max(1, max(s.diameter for s in subgraphs))
        self._membership = {n: [i for i, s in enumerate(subgraphs) if n in s] for n in graph.nodes}

    def __len__(self):
        return len(self.subgraphs)

    def __iter__(self):
        return iter(self.subgraphs)

    def __getitem__(self, index):
        return self.subgraphs[index]

    @property
    def nu(self):
        return self.nu_total / len(self)

    @property
    def labels(self):
        return [s.label for s in self.subgraphs]

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigurationError(f'no subgraph labelled {label!r} in the collection') from None

    def containing(self, node):
        return self._membership[node]

    def uncovered(self, nodes):
        return sorted({int(n) for n in nodes if not self._membership[int(n)]})

    def as_dict(self):
        return [
            {'label': s.label, 'members': list(s.members), 'diameter': s.diameter}
            for s in self.subgraphs
        ]


def collection_from_config(graph, spec=None):
    """
    Build Q from the `collection` section of an experiment config.

    * single: the full graph only
    * clusters: the graph's named clusters plus the full graph
    * explicit: `sets` of node lists (optionally `labels`)
    * balls: `radii_mode` all or dyadic
    """
    spec = dict(spec or {})
    mode = spec.get('mode', SINGLE)
    metric = spec.get('metric', INDUCED)
    nu_total = spec.get('nu_total', 1.0)
    include_full = spec.get('include_full', mode == CLUSTERS)

    if mode == SINGLE:
        subgraphs = []
        include_full = True
    elif mode == CLUSTERS:
        clusters = graph.metadata.get('clusters')
        if not clusters:
            raise MissingMetadata(f'graph kind {graph.metadata.get("kind")!r} names no clusters')
        subgraphs = [graph.subgraph(c, metric=metric, label=f'cluster{i}') for i, c in enumerate(clusters)]
    elif mode == EXPLICIT:
        sets = spec.get('sets')
        if not sets:
            raise ConfigurationError('explicit collections need a non-empty `sets` list')
        labels = spec.get('labels') or [f'set{i}' for i in range(len(sets))]
        if len(labels) != len(sets):
            raise ConfigurationError('explicit collection `labels` must match `sets` in length')
        subgraphs = [graph.subgraph(s, metric=metric, label=label) for s, label in zip(sets, labels)]
    elif mode == BALLS:
        subgraphs = ball_collection(graph, spec.get('radii_mode', ALL), spec.get('deduplicate', True), metric)
    else:
        raise ConfigurationError(f'unknown collection mode {mode!r}; use one of {COLLECTION_MODES}')

    if include_full and not any(s.node_subset == frozenset(graph.nodes) for s in subgraphs):
        subgraphs.append(graph.full_subgraph(metric, FULL_LABEL))

    collection = QCollection(graph, subgraphs, nu_total)
    logger.debug('collection %s: %d subgraphs, D_Q=%d', mode, len(collection), collection.diameter)
    return collection
