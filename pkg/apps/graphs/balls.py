"""Candidate subgraph collections built from balls around nodes."""
import math

from apps.core.exceptions import ConfigurationError

from .topology import INDUCED, Subgraph

ALL = 'all'
DYADIC = 'dyadic'
RADII_MODES = (ALL, DYADIC)


def ball_radii(eccentricity, radii_mode):
    """Radii used around a node with the given eccentricity"""
    if radii_mode == ALL:
        return list(range(eccentricity + 1))
    if radii_mode == DYADIC:
        radii = [0]
        if eccentricity >= 2:
            radii += [2 ** omega for omega in range(1, int(math.floor(math.log2(eccentricity))) + 1)]
        return radii
    raise ConfigurationError(f'unknown radii mode {radii_mode!r}; use one of {RADII_MODES}')


def ball_collection(graph, radii_mode=ALL, deduplicate=True, metric=INDUCED):
    """
    Induced balls {m : dist(n, m) <= r} for every node n and every radius
    of the mode, in node-then-radius order. Duplicate node sets keep their
    first occurrence.
    """
    seen = set()
    collection = []
    for node in graph.nodes:
        row = graph.dist[node]
        for radius in ball_radii(int(graph.eccentricity[node]), radii_mode):
            members = frozenset(int(m) for m in (row <= radius).nonzero()[0])
            if deduplicate and members in seen:
                continue
            seen.add(members)
            label = f'ball({node},{radius})'
            collection.append(Subgraph(graph, members, metric=metric, label=label))
    return collection
