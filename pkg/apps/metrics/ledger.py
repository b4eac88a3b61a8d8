"""
Per-round record of a run, and the regrets computed from it.
"""
from dataclasses import dataclass

import numpy as np

from apps.core.arrays import GrowableArray
from apps.core.exceptions import ConfigurationError, ProtocolViolation


def linearized_regret(w, g, u):
    """sum_t <w_t - u, g_t> over row arrays"""
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if not len(g):
        return 0.0
    return float(np.einsum('td,td->', w, g) - g.sum(axis=0) @ np.asarray(u, dtype=np.float64))


def regret_curve(w, g, u):
    """Cumulative linearized regret after each round"""
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    return np.cumsum(np.einsum('td,td->t', w, g) - g @ np.asarray(u, dtype=np.float64))


@dataclass(frozen=True)
class Comparator:
    name: str
    vector: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def comparators_from_config(entries, dim):
    """
    Comparators from config entries: a list of `dim` numbers, or
    {"name": ..., "vector": [...]} / {"name": ..., "norm": r, "direction": [...]}.
    """
    comparators = []
    for i, entry in enumerate(entries):
        if isinstance(entry, dict):
            name = entry.get('name', f'u{i}')
            if 'vector' in entry:
                vector = np.asarray(entry['vector'], dtype=np.float64)
            else:
                direction = np.asarray(entry.get('direction', [1.0] + [0.0] * (dim - 1)), dtype=np.float64)
                length = np.linalg.norm(direction)
                if length == 0:
                    raise ConfigurationError(f'comparator {name!r} has a zero direction')
                vector = float(entry.get('norm', 1.0)) * direction / length
        else:
            name = f'u{i}'
            vector = np.asarray(entry, dtype=np.float64)
        if vector.shape != (dim,):
            raise ConfigurationError(f'comparator {name!r} must have {dim} coordinates, got {vector.shape}')
        comparators.append(Comparator(name, vector))
    return comparators


class RunLedger:
    """
    Rows (t, I_t, w_t, g_t, g_hat_t, v_t, h_hat_t, h_t, loss) plus running
    sums per node and per forwarding domain, so cell regrets and per-domain
    linearized regrets come without replaying the run.

    In partition runs v_t and h_t are sums over the stacks containing I_t.
    """

    def __init__(self, dim, num_nodes, num_domains=1):
        self.dim = dim
        self.num_nodes = num_nodes
        self.num_domains = num_domains
        self._t = GrowableArray(dtype=np.int64)
        self._node = GrowableArray(dtype=np.int64)
        self._w = GrowableArray((dim,))
        self._g = GrowableArray((dim,))
        self._g_hat = GrowableArray((dim,))
        self._scalars = GrowableArray((4,))

        self.node_gain = np.zeros(num_nodes)
        self.node_gradient = np.zeros((num_nodes, dim))
        self.domain_gain = np.zeros(num_domains)
        self.domain_gradient = np.zeros((num_domains, dim))
        self.domain_rounds = np.zeros(num_domains, dtype=np.int64)

    def __len__(self):
        return len(self._t)

    def record(self, t, node, w, g, g_hat, v=0.0, h_hat=0.0, h=0.0, loss=None, domains=()):
        """
        Append one round. `domains` lists (domain index, w_F) for every
        stack that played this round; `loss` defaults to the linear loss.
        """
        if len(self) and t <= self._t[-1]:
            raise ProtocolViolation(f'ledger row {t} follows row {int(self._t[-1])}')
        w = np.asarray(w, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if loss is None:
            loss = float(w @ g)
        self._t.append(t)
        self._node.append(node)
        self._w.append(w)
        self._g.append(g)
        self._g_hat.append(g_hat)
        self._scalars.append((v, h_hat, h, loss))

        self.node_gain[node] += float(w @ g)
        self.node_gradient[node] += g
        for index, w_domain in domains:
            self.domain_gain[index] += float(np.asarray(w_domain) @ g)
            self.domain_gradient[index] += g
            self.domain_rounds[index] += 1

    @property
    def t(self):
        return self._t.view()

    @property
    def nodes(self):
        return self._node.view()

    @property
    def w(self):
        return self._w.view()

    @property
    def g(self):
        return self._g.view()

    @property
    def g_hat(self):
        return self._g_hat.view()

    @property
    def v(self):
        return self._scalars.view()[:, 0]

    @property
    def h_hat(self):
        return self._scalars.view()[:, 1]

    @property
    def h(self):
        return self._scalars.view()[:, 2]

    @property
    def losses(self):
        return self._scalars.view()[:, 3]

    def regret(self, u):
        """R_T(u) = sum_t (l_t(w_t) - l_t(u)) for the linear losses of the run"""
        return float(self.losses.sum() - self.g.sum(axis=0) @ np.asarray(u, dtype=np.float64))

    def linearized_regret(self, u):
        return linearized_regret(self.w, self.g, u)

    def regret_curve(self, u):
        return regret_curve(self.w, self.g, u)

    def cell_regret(self, nodes, u):
        """sum over rounds whose active node is in `nodes` of <w_t - u, g_t>"""
        nodes = list(nodes)
        u = np.asarray(u, dtype=np.float64)
        return float(self.node_gain[nodes].sum() - self.node_gradient[nodes].sum(axis=0) @ u)

    def domain_regret(self, index, u):
        """Linearized regret of one domain's stack over the rounds it played"""
        return float(self.domain_gain[index] - self.domain_gradient[index] @ np.asarray(u, dtype=np.float64))

    def best_regret(self, norm):
        """max of R_T(u) over |u| <= norm"""
        return float(self.losses.sum() + norm * np.linalg.norm(self.g.sum(axis=0)))

    def cell_best_regret(self, nodes, norm):
        """cell_regret against the worst comparator of norm at most `norm` for that cell"""
        nodes = list(nodes)
        return float(self.node_gain[nodes].sum() + norm * np.linalg.norm(self.node_gradient[nodes].sum(axis=0)))
