"""
Direction learners on the unit ball, fed with decoded gradients under delay.
"""
from abc import ABC, abstractmethod

import numpy as np

from apps.core.exceptions import ConfigurationError

from .accumulators import DelayedSum, DelayedVectorSum


def project_unit_ball(x):
    norm = float(np.linalg.norm(x))
    return x / norm if norm > 1.0 else x


def direction_predict(theta, lag_hat, c=1.0):
    """Lazy projection: z = Pi(-c / sqrt(1 + lag_hat) * theta)"""
    return project_unit_ball(-c / np.sqrt(1.0 + lag_hat) * np.asarray(theta, dtype=np.float64))


def ogd_baseline_predict(theta, learning_rate):
    """Unprojected gradient descent from the origin: w = -eta * theta"""
    return -learning_rate * np.asarray(theta, dtype=np.float64)


class DirectionLearner(ABC):
    """
    Interface for delay-tolerant learners on the unit ball. `predict` takes
    a `KnowledgeView` of the active node; `update` is called once per issued
    gradient with its position in the learner's knowledge.
    """

    def __init__(self, knowledge, dim):
        if dim < 1:
            raise ConfigurationError('dimension must be at least 1')
        self.knowledge = knowledge
        self.dim = dim
        self.theta = DelayedVectorSum(knowledge, dim)

    def __len__(self):
        return len(self.theta)

    @abstractmethod
    def predict(self, view):
        pass

    def update(self, position, g_hat):
        self.theta.record(position, g_hat)


class LazyProjectionLearner(DirectionLearner):
    """Step size c / sqrt(1 + lag_hat), where lag_hat is the lag of the available decoded gradients"""

    def __init__(self, knowledge, dim, c=1.0):
        super().__init__(knowledge, dim)
        if not c > 0:
            raise ConfigurationError(f'direction step constant c must be positive, got {c}')
        self.c = float(c)
        self.norms = DelayedSum(knowledge)

    def lag_hat(self, view):
        return self.norms.totals(view).lag

    def predict(self, view):
        return direction_predict(self.theta.total(view), self.lag_hat(view), self.c)

    def update(self, position, g_hat):
        super().update(position, g_hat)
        self.norms.record(position, float(np.linalg.norm(g_hat)))

