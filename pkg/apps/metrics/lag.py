"""
Lag accounting: sum_t (x_t^2 + 2 |x_t| sum_{i in gamma(t)} |x_i|) for the
true gradient norms, the decoded gradient norms and the scalar feedback.
"""
import numpy as np

from apps.learners.accumulators import DelayedSum


def lag(values, gammas):
    """Lag of per-round magnitudes given each round's missing set (positions)"""
    values = np.abs(np.asarray(values, dtype=np.float64))
    total = 0.0
    for t, gamma in enumerate(gammas):
        total += values[t] ** 2 + 2 * values[t] * float(values[list(gamma)].sum())
    return total


def lag_ceiling(grad_bound, diameter, T):
    """G^2 (1 + 2D) T"""
    return grad_bound ** 2 * (1 + 2 * diameter) * T


def approximate_lag_ceiling(true_lag, eps, grad_bound, diameter, T):
    """Lambda + 9 eps G D T, which bounds the decoded-gradient lag"""
    return true_lag + 9 * eps * grad_bound * diameter * T


class LagTracker:
    """Running Lambda, Lambda_hat and Lambda^h over one knowledge (normally the whole graph)"""

    def __init__(self, knowledge):
        self.knowledge = knowledge
        self._true = DelayedSum(knowledge)
        self._decoded = DelayedSum(knowledge)
        self._feedback = DelayedSum(knowledge)

    def record(self, position, g, g_hat, h):
        """Returns the running true lag after this round"""
        self._true.record(position, float(np.linalg.norm(g)))
        self._decoded.record(position, float(np.linalg.norm(g_hat)))
        self._feedback.record(position, abs(float(h)))
        return self.true_lag

    @property
    def true_lag(self):
        return self._true.full_totals().lag

    @property
    def decoded_lag(self):
        return self._decoded.full_totals().lag

    @property
    def feedback_lag(self):
        return self._feedback.full_totals().lag
