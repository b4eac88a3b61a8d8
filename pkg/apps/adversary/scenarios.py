"""
Activation and loss streams.

Every stream is generated up front from (tag, seed, params) and holds
linear losses only, given by their gradients. Regenerating a scenario from
the same triple is bit-identical.
"""
import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from apps.core.exceptions import ConfigurationError, MissingMetadata, NoCollisionFound, NormExceeded
from apps.core.seeding import SCENARIO_STREAM, derive_rng
from apps.encoding.coders import encode_deterministic, find_collision, sample_ball

logger = logging.getLogger(__name__)

RANDOM = 'random'
TWO_CLUSTER = 'two_cluster'
WORST_DELAY = 'worst_delay'
ENCODING_ATTACK = 'encoding_attack'
SIGN_SEQUENCE = 'sign_sequence'

NORM_TOLERANCE = 1e-12


@dataclass
class Scenario:
    tag: str
    seed: int
    activations: np.ndarray
    gradients: np.ndarray
    grad_bound: float
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.activations = np.asarray(self.activations, dtype=np.int64).reshape(-1)
        self.gradients = np.asarray(self.gradients, dtype=np.float64)
        if self.gradients.ndim != 2 or len(self.gradients) != len(self.activations):
            raise ConfigurationError('scenario needs one gradient row per activation')
        assert_gradient_norms(self.gradients, self.grad_bound)

    def __len__(self):
        return len(self.activations)

    @property
    def dim(self):
        return self.gradients.shape[1]

    def rounds(self):
        """(t, node, g_t) for t = 1..T"""
        for k, (node, g) in enumerate(zip(self.activations, self.gradients)):
            yield k + 1, int(node), g

    def descriptor(self):
        return {'tag': self.tag, 'seed': self.seed, 'params': self.params}


def assert_gradient_norms(gradients, grad_bound):
    if not len(gradients):
        return
    norms = np.linalg.norm(gradients, axis=1)
    worst = int(norms.argmax())
    if norms[worst] > grad_bound * (1 + NORM_TOLERANCE):
        raise NormExceeded(f'scenario gradient {worst + 1} has norm {norms[worst]:.6g} > G = {grad_bound:.6g}')


def _rng(seed, tag):
    return derive_rng(seed, f'{SCENARIO_STREAM}/{tag}')


def _unit(vector, dim):
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (dim,):
        raise ConfigurationError(f'direction must have {dim} coordinates, got {vector.shape}')
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ConfigurationError('direction must be non-zero')
    return vector / norm


def _basis(dim):
    e1 = np.zeros(dim)
    e1[0] = 1.0
    return e1


def _check_node(graph, node):
    if node not in graph:
        raise ConfigurationError(f'active node {node} is not in the graph')
    return node


def random_scenario(graph, T, dim, grad_bound, seed):
    """Uniform activations, gradients uniform in the G-ball"""
    rng = _rng(seed, RANDOM)
    activations = rng.choice(np.asarray(graph.nodes), size=T)
    gradients = sample_ball(rng, dim, grad_bound, T) if T else np.zeros((0, dim))
    return Scenario(RANDOM, seed, activations, gradients, grad_bound)


def two_cluster_scenario(graph, T, dim, grad_bound, seed, bias=0.0, directions=None, block=8):
    """
    Only cluster nodes are active. Rounds come in blocks of `block`; block k
    belongs to cluster k mod C, whose nodes are drawn uniformly within it.
    Every round of a block has gradient -G s dir_c with one sign s per block,
    s = +1 with probability (1 + bias) / 2, so u = |u| dir_c is the cluster's
    preferred comparator once bias > 0. Directions default to +e1 and -e1.

    Signs flip between blocks, so an iterate built on the previous block is
    stale: the penalty grows with how long gradients take to reach the
    active node. Node choice and signs come from separate streams, so the
    within-cluster stream does not depend on the connector length.
    """
    clusters = graph.metadata.get('clusters')
    if not clusters:
        raise MissingMetadata(f'graph kind {graph.metadata.get("kind")!r} names no clusters')
    if not 0 <= bias <= 1:
        raise ConfigurationError(f'bias must lie in [0, 1], got {bias}')
    if block < 1:
        raise ConfigurationError(f'block must be at least 1, got {block}')
    if directions is None:
        directions = [_basis(dim), -_basis(dim)]
    directions = np.stack([_unit(d, dim) for d in directions])
    if len(directions) != len(clusters):
        raise ConfigurationError(f'{len(clusters)} clusters but {len(directions)} directions')

    blocks = -(-T // block) if T else 0
    owner = np.repeat(np.arange(blocks) % len(clusters), block)[:T]
    signs = np.where(_rng(seed, f'{TWO_CLUSTER}/signs').random(blocks) < (1 + bias) / 2, 1.0, -1.0)
    signs = np.repeat(signs, block)[:T]
    draws = _rng(seed, f'{TWO_CLUSTER}/nodes').random(T)
    sizes = np.array([len(c) for c in clusters])
    offsets = np.minimum((draws * sizes[owner]).astype(np.int64), sizes[owner] - 1)
    members = [np.asarray(c, dtype=np.int64) for c in clusters]
    activations = np.array([members[c][i] for c, i in zip(owner, offsets)], dtype=np.int64)
    gradients = -grad_bound * signs[:, None] * directions[owner]
    return Scenario(
        TWO_CLUSTER, seed, activations, gradients.reshape(T, dim), grad_bound,
        params={'bias': bias, 'block': block},
        extra={'cluster_directions': directions, 'clusters': [list(c) for c in clusters]},
    )


def diameter_path(graph):
    """Node sequence of one shortest path realising the diameter"""
    D = graph.diameter
    local = np.argwhere(graph.dist == D)[0]
    source, target = graph.members[local[0]], graph.members[local[1]]
    return nx.shortest_path(graph.to_networkx(), source, target)


def worst_delay_cycle(graph):
    """Path-local nodes 0, 2, ..., 2(m - 1) with m = max(1, floor(D / 2))"""
    path = diameter_path(graph)
    span = max(1, graph.diameter // 2)
    return [path[2 * j] for j in range(span)]


def worst_delay_scenario(graph, T, dim, grad_bound, seed, direction=None):
    """
    Cycle through every other node of a diameter path so the active node
    never sees the current cycle. Losses are +-G along `direction` with one
    sign per cycle, which the active nodes cannot react to within the cycle.

    floor(D / 2) is the largest staleness the cycle reaches, not a per-round
    value. For D <= 4 every round after the first cycle is exactly that
    stale; on longer paths rounds late in a cycle see gradients from the
    previous cycle issued nearby and are fresher.
    """
    cycle = worst_delay_cycle(graph)
    direction = _basis(dim) if direction is None else _unit(direction, dim)
    rng = _rng(seed, WORST_DELAY)
    blocks = -(-T // len(cycle)) if T else 0
    signs = np.repeat(rng.choice([-1.0, 1.0], size=blocks), len(cycle))[:T]
    activations = np.resize(np.asarray(cycle, dtype=np.int64), T)
    return Scenario(
        WORST_DELAY, seed, activations, grad_bound * signs[:, None] * direction[None, :], grad_bound,
        params={'delay': len(cycle)},
        extra={'cycle': cycle},
    )


def grid_collision(spec):
    """
    Two points in the grid cell just above the origin, one at its lower
    corner and one as far along the diagonal as the cell and the G-ball
    allow. Their payloads agree.
    """
    if not spec.is_deterministic:
        raise ConfigurationError('collision attack needs a deterministic encoder')
    width = 2 * spec.grad_bound / 2 ** spec.cell_bits
    margin = width * 1e-6
    diagonal = np.ones(spec.dim) / np.sqrt(spec.dim)
    g = margin * np.ones(spec.dim)
    reach = min(np.sqrt(spec.dim) * (width - margin), spec.grad_bound * (1 - 1e-9))
    h = reach * diagonal
    gap = float(np.linalg.norm(g - h))
    if gap <= 64 * np.finfo(np.float64).eps * spec.grad_bound:
        raise NoCollisionFound(f'cell width {width:.3g} is below float resolution at G = {spec.grad_bound:.6g}')
    return g, h, gap


def encoding_attack_scenario(spec, T, seed, node=0, variant='g', search='grid', samples=4096):
    """
    I.i.d. stream of g (probability 1/2) and -(g + h)/2, where g and h share
    a payload. `variant='h'` swaps h in for g; both variants look identical
    to a gradient-oblivious learner.
    """
    if variant not in ('g', 'h'):
        raise ConfigurationError(f"variant must be 'g' or 'h', got {variant!r}")
    if search == 'grid':
        g, h, gap = grid_collision(spec)
    elif search == 'sampled':
        g, h, gap = find_collision(spec, samples=samples, seed=seed)
    else:
        raise ConfigurationError(f'unknown collision search {search!r}')
    if encode_deterministic(g, spec) != encode_deterministic(h, spec):
        raise NoCollisionFound('collision pair encodes differently')

    rng = _rng(seed, ENCODING_ATTACK)
    coins = rng.random(T) < 0.5
    first = g if variant == 'g' else h
    gradients = np.where(coins[:, None], first[None, :], -(g + h)[None, :] / 2)
    logger.debug('collision gap %.6g for k=%d d=%d', gap, spec.bits_per_gradient, spec.dim)
    return Scenario(
        ENCODING_ATTACK, seed, np.full(T, node), gradients.reshape(T, spec.dim), spec.grad_bound,
        params={'variant': variant, 'search': search},
        extra={'pair': (g, h), 'gap': gap, 'coins': coins},
    )


def attack_expected_regret(g, h, w_sum, T, u_norm):
    """
    Expected regret, given the played iterates, of both attack variants
    against their aligned comparators: u = |u| (h - g)/|h - g| for the g
    variant and the opposite for the h variant. Their maximum is at least
    (T/4) |g - h| |u|.
    """
    diff = np.asarray(g) - np.asarray(h)
    gap = float(np.linalg.norm(diff))
    u = u_norm * -diff / gap
    with_g = float(diff / 4 @ (np.asarray(w_sum) - T * u))
    with_h = float(-diff / 4 @ (np.asarray(w_sum) + T * u))
    return with_g, with_h


def sign_sequence_scenario(T, dim, grad_bound, seed, direction=None, node=0):
    """I.i.d. +-G losses along a fixed direction at one node"""
    direction = _basis(dim) if direction is None else _unit(direction, dim)
    rng = _rng(seed, SIGN_SEQUENCE)
    signs = rng.choice([-1.0, 1.0], size=T)
    return Scenario(SIGN_SEQUENCE, seed, np.full(T, node), grad_bound * signs[:, None] * direction[None, :],
                    grad_bound, extra={'direction': direction})


SCENARIO_TAGS = (RANDOM, TWO_CLUSTER, WORST_DELAY, ENCODING_ATTACK, SIGN_SEQUENCE)


def scenario_from_config(spec, graph, T, dim, grad_bound, seed, encoder=None):
    """
    Build the `scenario` section of an experiment config. `encoder` is the
    run's encoder spec, needed by the collision attack.
    """
    spec = dict(spec or {'tag': RANDOM})
    tag = spec.pop('tag', RANDOM)
    if tag == RANDOM:
        scenario = random_scenario(graph, T, dim, grad_bound, seed)
    elif tag == TWO_CLUSTER:
        scenario = two_cluster_scenario(graph, T, dim, grad_bound, seed, spec.get('bias', 0.0),
                                        spec.get('directions'), spec.get('block', 8))
    elif tag == WORST_DELAY:
        scenario = worst_delay_scenario(graph, T, dim, grad_bound, seed, spec.get('direction'))
    elif tag == ENCODING_ATTACK:
        if encoder is None or not encoder.is_deterministic:
            raise ConfigurationError('encoding_attack needs a deterministic_grid encoder')
        node = _check_node(graph, spec.get('node', graph.nodes[0]))
        scenario = encoding_attack_scenario(encoder, T, seed, node, spec.get('variant', 'g'),
                                            spec.get('search', 'grid'), spec.get('samples', 4096))
    elif tag == SIGN_SEQUENCE:
        node = _check_node(graph, spec.get('node', graph.nodes[0]))
        scenario = sign_sequence_scenario(T, dim, grad_bound, seed, spec.get('direction'), node)
    else:
        raise ConfigurationError(f'unknown scenario {tag!r}; use one of {SCENARIO_TAGS}')
    scenario.params.update(spec)
    return scenario
