"""
Delay-corrected sums over the gradients available at one node.

For per-gradient values x_s the learners need, over s in S_n(t),

    sum x_s,   sum x_s^2,   sum |x_s| * sum_{i in gamma(s), i in S_n(t)} |x_i|

Settled records (see `apps.transport.knowledge`) are the same for every
node, so they are served from prefix sums; only the recent window is
recomputed per query.
"""
from dataclasses import dataclass

import numpy as np

from apps.core.arrays import GrowableArray
from apps.core.exceptions import DuplicateGradient, ProtocolViolation


def _check_position(position, recorded):
    if position < recorded:
        raise DuplicateGradient(f'gradient at position {position} was already recorded')
    if position > recorded:
        raise ProtocolViolation(f'gradient at position {position} skips position {recorded}')


@dataclass(frozen=True)
class DelayedTotals:
    linear: float
    squares: float
    cross: float

    @property
    def lag(self):
        """sum x^2 + 2 sum |x_s| sum |x_i|"""
        return self.squares + 2 * self.cross


class DelayedSum:

    def __init__(self, knowledge):
        self.knowledge = knowledge
        self._values = GrowableArray()
        self._prefix_linear = GrowableArray()
        self._prefix_squares = GrowableArray()
        self._prefix_cross = GrowableArray()
        for prefix in (self._prefix_linear, self._prefix_squares, self._prefix_cross):
            prefix.append(0.0)

    def __len__(self):
        return len(self._values)

    @property
    def values(self):
        return self._values.view()

    def full_cross(self, position, value):
        """|x_s| * sum over all of gamma(s), the correction once s is settled"""
        gamma = self.knowledge.missing_at_issue(position)
        return abs(value) * float(np.abs(self.values[gamma]).sum()) if len(gamma) else 0.0

    def record(self, position, value):
        _check_position(position, len(self))
        value = float(value)
        cross = self.full_cross(position, value)
        self._values.append(value)
        self._prefix_linear.append(self._prefix_linear[-1] + value)
        self._prefix_squares.append(self._prefix_squares[-1] + value * value)
        self._prefix_cross.append(self._prefix_cross[-1] + cross)
        return cross

    def full_totals(self):
        """Sums over every recorded value with the complete gamma(s) of each"""
        return DelayedTotals(
            float(self._prefix_linear[-1]),
            float(self._prefix_squares[-1]),
            float(self._prefix_cross[-1]),
        )

    def window_weights(self, view):
        """|x_i| on the window's ring slots, zero where i is not available"""
        weights = np.zeros(self.knowledge.capacity)
        weights[view.window_slots] = np.abs(self.values[view.window]) * view.window_available
        return weights

    def totals(self, view):
        k = view.settled
        linear = self._prefix_linear[k]
        squares = self._prefix_squares[k]
        cross = self._prefix_cross[k]

        live = view.window_unsettled & view.window_available
        if live.any():
            positions = view.window[live]
            values = self.values[positions]
            linear += float(values.sum())
            squares += float(values @ values)
            rows = self.knowledge.gamma_rows(view.window_slots[live])
            cross += float(np.abs(values) @ (rows @ self.window_weights(view)))
        return DelayedTotals(float(linear), float(squares), float(cross))


class DelayedVectorSum:
    """Sum of available d-vectors"""

    def __init__(self, knowledge, dim):
        self.knowledge = knowledge
        self.dim = dim
        self._vectors = GrowableArray((dim,))
        self._prefix = GrowableArray((dim,))
        self._prefix.append(np.zeros(dim))

    def __len__(self):
        return len(self._vectors)

    def record(self, position, vector):
        _check_position(position, len(self))
        self._vectors.append(vector)
        self._prefix.append(self._prefix[-1] + vector)

    def total(self, view):
        total = self._prefix[view.settled].copy()
        live = view.window_unsettled & view.window_available
        if live.any():
            total += self._vectors.view()[view.window[live]].sum(axis=0)
        return total
