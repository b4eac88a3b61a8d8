"""
Availability bookkeeping under the standard forwarding strategy.

Every node re-forwards each new gradient to all neighbours as soon as it
arrives, so gradient s issued at node o reaches node n at round
s + dist(o, n) and is usable from then on (never in its own issue round).
Availability is therefore computed from distances instead of simulating
message flooding.

Records are indexed by position (registration order, increasing issue
time). For a query at round t, positions split into

* settled: t - s >= lag, available at every node of the domain;
* window: t - 2 lag < s, the only records whose availability, or whose
  missing set, can still differ between nodes.

`lag` is max(1, domain diameter). The window holds at most 2 lag records
since at most one gradient is issued per round.
"""
from dataclasses import dataclass

import numpy as np

from apps.core.arrays import GrowableArray
from apps.core.exceptions import ConfigurationError, DuplicateGradient, ProtocolViolation


@dataclass(frozen=True)
class KnowledgeView:
    """What node `node` can use at round `t`"""
    node: int
    t: int
    settled: int
    window: np.ndarray
    window_slots: np.ndarray
    window_available: np.ndarray
    window_unsettled: np.ndarray

    @property
    def available_count(self):
        return self.settled + int((self.window_available & self.window_unsettled).sum())

    @property
    def unsettled(self):
        return self.window[self.window_unsettled]

    @property
    def unsettled_available(self):
        return self.window_available[self.window_unsettled]


class NodeKnowledge:
    """
    S_n(t), gamma(s) and gamma_n(s) for one forwarding domain (a graph or a
    subgraph with its own metric). Node arguments are parent-graph ids.
    """

    def __init__(self, domain, horizon=None):
        self.domain = domain
        self.horizon = domain.diameter if horizon is None else int(horizon)
        self.truncated = self.horizon < domain.diameter
        self.lag = max(1, domain.diameter)
        self.capacity = 2 * self.lag + 2
        self._dist = domain.dist
        self._local = domain.local_index

        self._issue_times = GrowableArray(dtype=np.int64)
        self._origins = GrowableArray(dtype=np.int64)
        self._gammas = []
        self._gamma_ring = np.zeros((self.capacity, self.capacity))

    def __len__(self):
        return len(self._issue_times)

    def __contains__(self, node):
        return node in self._local

    @property
    def issue_times(self):
        return self._issue_times.view()

    def slot(self, position):
        return position % self.capacity

    def _local_node(self, node):
        try:
            return self._local[node]
        except KeyError:
            raise ProtocolViolation(f'node {node} is not part of {self.domain.label}') from None

    def register(self, issue_time, origin):
        """Add gradient `issue_time` issued at `origin`; returns its position"""
        origin_local = self._local_node(origin)
        if len(self):
            last = int(self._issue_times[-1])
            if issue_time == last:
                raise DuplicateGradient(f'gradient {issue_time} registered twice in {self.domain.label}')
            if issue_time < last:
                raise ProtocolViolation(f'gradient {issue_time} registered after gradient {last}')

        # with a truncated horizon far gradients never arrive, so scan everything
        lo = 0 if self.truncated else self._window_start(issue_time - self.lag)
        candidates = np.arange(lo, len(self))
        ages = issue_time - self.issue_times[lo:]
        hops = self._dist[self._origins[lo:], origin_local]
        gamma = candidates[(ages < np.maximum(hops, 1)) | (hops > self.horizon)]

        position = self._issue_times.append(issue_time)
        self._origins.append(origin_local)
        self._gammas.append(gamma)

        row = self.slot(position)
        self._gamma_ring[row, :] = 0.0
        self._gamma_ring[:, row] = 0.0
        self._gamma_ring[row, gamma % self.capacity] = 1.0
        return position

    def _window_start(self, threshold):
        """First position whose issue time exceeds `threshold`"""
        return int(np.searchsorted(self.issue_times, threshold, side='right'))

    def missing_at_issue(self, position):
        """gamma(s) as positions: gradients not yet at I_s when g_s was issued"""
        return self._gammas[position]

    def arrival_round(self, origin, node, issue_time):
        """First round `node` can use a gradient issued at `origin`; None if it is discarded first"""
        hops = int(self._dist[self._local_node(origin), self._local_node(node)])
        if hops > self.horizon:
            return None
        return issue_time + max(hops, 1)

    def is_available(self, position, node, t):
        s = int(self._issue_times[position])
        hops = self._dist[self._origins[position], self._local_node(node)]
        return s < t and t - s >= hops and hops <= self.horizon

    def available(self, node, t):
        """S_n(t) as a sorted array of issue times (direct evaluation)"""
        n = self._local_node(node)
        times = self.issue_times
        ages = t - times
        hops = self._dist[self._origins.view(), n]
        mask = (ages >= np.maximum(hops, 1)) & (hops <= self.horizon)
        return times[mask]

    def newly_usable(self, node, position, t):
        """gamma_n(s): the part of gamma(s) already available at `node` at round t"""
        gamma = self._gammas[position]
        return np.array([i for i in gamma if self.is_available(i, node, t)], dtype=np.int64)

    def view(self, node, t):
        if self.truncated:
            raise ConfigurationError(
                f"discard horizon {self.horizon} is below the diameter {self.domain.diameter} "
                f"of {self.domain.label}; some members would never receive its gradients"
            )
        n = self._local_node(node)
        times = self.issue_times
        settled = self._window_start(t - self.lag)
        lo = self._window_start(t - 2 * self.lag)
        window = np.arange(lo, len(self))
        ages = t - times[lo:]
        hops = self._dist[self._origins[lo:], n]
        unsettled = window >= settled
        available = (~unsettled) | (ages >= np.maximum(hops, 1))
        return KnowledgeView(
            node=node,
            t=t,
            settled=settled,
            window=window,
            window_slots=window % self.capacity,
            window_available=available,
            window_unsettled=unsettled,
        )

    def freshest(self, view):
        """Issue time of the newest gradient usable in `view`; None if there is none"""
        recent = view.unsettled[view.unsettled_available]
        last = max(int(recent.max()) if len(recent) else -1, view.settled - 1)
        return int(self._issue_times[last]) if last >= 0 else None

    def gamma_rows(self, slots):
        return self._gamma_ring[slots]

    def staleness(self, node, t):
        """t minus the freshest issue time available at `node`; None if nothing is"""
        times = self.available(node, t)
        if not len(times):
            return None
        return int(t - times[-1])
