"""
Standard forwarding over one or more domains sharing a physical network,
with per-node per-round accounting of distinct payloads and bits.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from apps.core.arrays import GrowableArray
from apps.core.exceptions import BudgetExceeded, ConfigurationError, ProtocolViolation
from apps.graphs.topology import AMBIENT, INDUCED

from .knowledge import NodeKnowledge

logger = logging.getLogger(__name__)


def forward_schedule(domain, origin, horizon, num_nodes):
    """
    Boolean (horizon, N) matrix: entry (age, node) is set when `node` sends
    the gradient of `origin` `age` rounds after issue. A member forwards once,
    on arrival, if some neighbour in the domain is one hop farther from the
    origin and the message is younger than the horizon.

    Ambient-metric domains route over the parent graph, so every parent node
    on a shortest path from the origin to a farther member relays it,
    members or not.
    """
    if getattr(domain, 'metric', INDUCED) == AMBIENT:
        return _ambient_schedule(domain, origin, horizon, num_nodes)
    local = domain.local_index[origin]
    hops = domain.dist[local]
    farther = (domain.adjacency & (hops[None, :] == hops[:, None] + 1)).any(axis=1)
    sends = farther & (hops + 1 <= horizon)
    schedule = np.zeros((horizon, num_nodes), dtype=bool)
    members = np.asarray(domain.members)
    schedule[hops[sends], members[sends]] = True
    return schedule


def _ambient_schedule(domain, origin, horizon, num_nodes):
    dist = domain.parent.dist
    members = np.asarray(domain.members)
    hops = dist[origin]
    to_members = dist[:, members]
    on_path = ((hops[:, None] + to_members) == hops[members][None, :]) & (to_members >= 1)
    sends = on_path.any(axis=1) & (hops + 1 <= horizon)
    schedule = np.zeros((horizon, num_nodes), dtype=bool)
    nodes = np.flatnonzero(sends)
    schedule[hops[nodes], nodes] = True
    return schedule


@dataclass
class RoundTraffic:
    t: int
    active_node: int
    sends: int
    bits: int
    max_sends: int
    max_relays: int


class BitLedger:
    """
    Ring buffer of pending sends, one row per future round. Distinct payloads
    per (node, round) are counted once however many domains carry them.
    """

    def __init__(self, num_nodes, horizon, payload_bits, bit_budget=None):
        if horizon < 1:
            raise ConfigurationError('forwarding horizon must be at least 1')
        self.horizon = horizon
        self.payload_bits = payload_bits
        self.bit_budget = bit_budget
        self._pending = np.zeros((horizon, num_nodes), dtype=np.int64)
        self.rounds = []

    def schedule(self, issue_time, schedule):
        for age in np.flatnonzero(schedule.any(axis=1)):
            self._pending[(issue_time + age) % self.horizon] += schedule[age]

    def close_round(self, t, active_node, own_sends):
        row = self._pending[t % self.horizon]
        relays = row.copy()
        relays[active_node] -= own_sends
        max_sends = int(row.max(initial=0))
        if max_sends > self.horizon:
            node = int(row.argmax())
            raise BudgetExceeded(
                f'node {node} must forward {max_sends} distinct payloads in round {t}, '
                f'more than the horizon {self.horizon}'
            )
        bits_per_node = max_sends * self.payload_bits
        if self.bit_budget is not None and bits_per_node > self.bit_budget:
            raise BudgetExceeded(
                f'round {t}: a node sends {bits_per_node} bits, above the budget of {self.bit_budget}'
            )
        traffic = RoundTraffic(
            t=t,
            active_node=active_node,
            sends=int(row.sum()),
            bits=int(row.sum()) * self.payload_bits,
            max_sends=max_sends,
            max_relays=int(relays.max(initial=0)),
        )
        row[:] = 0
        self.rounds.append(traffic)
        return traffic


def max_in_flight(rounds):
    """Most distinct relayed payloads any node forwarded in one round"""
    return max((r.max_relays for r in rounds), default=0)


@dataclass
class TraceRow:
    t: int
    active_node: int
    available: int
    missing: int
    bits: int
    staleness: int = None


@dataclass
class ForwardingStep:
    t: int
    positions: dict = field(default_factory=dict)
    global_position: int = 0
    traffic: RoundTraffic = None


class ForwardingSimulator:
    """
    One transport instance per run.

    `domains` are the forwarding domains whose learners consume gradients
    (the whole graph, or the subgraphs of a collection); each only carries
    gradients issued by its own members. `accounting` tracks every gradient
    over the whole graph and feeds lag and trace bookkeeping.
    """

    def __init__(self, graph, domains=None, horizon=None, payload_bits=0, bit_budget=None):
        self.graph = graph
        self.domains = list(domains) if domains is not None else [graph]
        diameters = [d.diameter for d in self.domains]
        self.horizon = int(horizon) if horizon is not None else max(1, max(diameters))
        self.knowledge = [NodeKnowledge(d, self.horizon) for d in self.domains]
        self.accounting = NodeKnowledge(graph, max(graph.diameter, self.horizon))
        self.ledger = BitLedger(graph.num_nodes, self.horizon, payload_bits, bit_budget)
        self.trace = []
        self._membership = {
            node: [i for i, d in enumerate(self.domains) if node in d] for node in graph.nodes
        }
        self._schedules = {}
        self._last_t = 0

    def containing(self, node):
        return self._membership[node]

    def _combined_schedule(self, origin):
        if origin not in self._schedules:
            combined = np.zeros((self.horizon, self.graph.num_nodes), dtype=bool)
            for i in self._membership[origin]:
                combined |= forward_schedule(self.domains[i], origin, self.horizon, self.graph.num_nodes)
            self._schedules[origin] = combined
        return self._schedules[origin]

    def step_forwarding(self, t, active_node, record):
        """
        Issue `record` at round t from `active_node`: register it with every
        domain containing the node, schedule its sends, and close the
        round's traffic.
        """
        if record.issue_time != t or record.origin != active_node:
            raise ProtocolViolation(f'record ({record.issue_time}, {record.origin}) issued at round {t} by {active_node}')
        if t != self._last_t + 1:
            raise ProtocolViolation(f'round {t} follows round {self._last_t}; rounds must be consecutive')
        self._last_t = t

        view = self.accounting.view(active_node, t)
        freshest = self.accounting.freshest(view)
        step = ForwardingStep(t=t)
        for i in self._membership[active_node]:
            step.positions[i] = self.knowledge[i].register(t, active_node)
        step.global_position = self.accounting.register(t, active_node)

        schedule = self._combined_schedule(active_node)
        self.ledger.schedule(t, schedule)
        own_sends = int(schedule[0, active_node])
        step.traffic = self.ledger.close_round(t, active_node, own_sends)

        missing = len(self.accounting.missing_at_issue(step.global_position))
        self.trace.append(TraceRow(
            t=t,
            active_node=active_node,
            available=view.available_count,
            missing=missing,
            bits=step.traffic.bits,
            staleness=None if freshest is None else t - freshest,
        ))
        return step

    def max_in_flight(self):
        return max_in_flight(self.ledger.rounds)
