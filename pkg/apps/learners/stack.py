"""
Learner stacks: what one forwarding domain plays each round.

A stack predicts for the active node from its `KnowledgeView` and is then
fed the decoded gradient of that same round once it is registered.
"""
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import ConfigurationError, ProtocolViolation

from .accumulators import DelayedVectorSum
from .direction import LazyProjectionLearner, ogd_baseline_predict
from .scale import ScaleLearner

COMPARATOR_ADAPTIVE = 'comparator_adaptive'
OGD = 'ogd'
STACK_KINDS = (COMPARATOR_ADAPTIVE, OGD)


@dataclass(frozen=True)
class StackPrediction:
    w: np.ndarray
    v: float
    z: np.ndarray


def blackbox_combine(v, z):
    """w = v z"""
    if v < 0:
        raise ProtocolViolation(f'scale prediction must be non-negative, got {v}')
    return v * np.asarray(z, dtype=np.float64)


def feedback_split(z, g_hat):
    """Direction learner gets g_hat, the scale learner <z, g_hat>"""
    return g_hat, float(np.dot(z, g_hat))


def scale_tuning(spec, eps=None, grad_bound=None):
    """
    (eps, G_hat) for the scale learner. Deterministic coding: eps is the
    encoder error and G_hat = G + eps. Stochastic coding: eps = 0 and
    G_hat = 2dG. Either may be overridden.
    """
    eps = spec.error_bound if eps is None else float(eps)
    grad_bound = spec.decoded_norm_bound if grad_bound is None else float(grad_bound)
    return eps, grad_bound


class LearnerStack:
    kind = None

    def __init__(self, knowledge, dim):
        self.knowledge = knowledge
        self.dim = dim
        self._pending = None

    def view(self, node, t):
        return self.knowledge.view(node, t)

    def predict(self, node, t):
        if self._pending is not None:
            raise ProtocolViolation(f'{self.label} predicted twice without feedback')
        self._pending = self._predict(self.view(node, t))
        return self._pending

    def update(self, position, g_hat):
        """Feed the decoded gradient of the last prediction; returns h_hat"""
        if self._pending is None:
            raise ProtocolViolation(f'{self.label} received feedback without a prediction')
        prediction, self._pending = self._pending, None
        return self._update(position, prediction, np.asarray(g_hat, dtype=np.float64))

    @property
    def label(self):
        return self.knowledge.domain.label

    def potential(self):
        return None


class ComparatorAdaptiveStack(LearnerStack):
    """Scale learner times direction learner, the black-box reduction"""
    kind = COMPARATOR_ADAPTIVE

    def __init__(self, knowledge, dim, nu, eps, grad_bound, delay_bound, c=1.0, a_multiplier=1.0,
                 cross_check=None):
        super().__init__(knowledge, dim)
        self.scale = ScaleLearner(knowledge, nu, eps, grad_bound, delay_bound, a_multiplier, cross_check)
        self.direction = LazyProjectionLearner(knowledge, dim, c)

    def _predict(self, view):
        z = self.direction.predict(view)
        v = self.scale.predict(view)
        return StackPrediction(w=blackbox_combine(v, z), v=v, z=z)

    def _update(self, position, prediction, g_hat):
        g_direction, h_hat = feedback_split(prediction.z, g_hat)
        self.direction.update(position, g_direction)
        self.scale.update(position, h_hat)
        return h_hat

    def potential(self):
        return self.scale.potential()


class OGDStack(LearnerStack):
    """Non-adaptive baseline; v and z report the norm and direction of w"""
    kind = OGD

    def __init__(self, knowledge, dim, learning_rate):
        super().__init__(knowledge, dim)
        if not learning_rate > 0:
            raise ConfigurationError(f'learning rate must be positive, got {learning_rate}')
        self.learning_rate = float(learning_rate)
        self.theta = DelayedVectorSum(knowledge, dim)

    def _predict(self, view):
        w = ogd_baseline_predict(self.theta.total(view), self.learning_rate)
        v = float(np.linalg.norm(w))
        z = w / v if v > 0 else np.zeros(self.dim)
        return StackPrediction(w=w, v=v, z=z)

    def _update(self, position, prediction, g_hat):
        self.theta.record(position, g_hat)
        return float(np.dot(prediction.z, g_hat))


def make_stack(kind, knowledge, dim, *, nu=1.0, eps=0.0, grad_bound=1.0, delay_bound=None, c=1.0,
               a_multiplier=1.0, learning_rate=None, cross_check=None):
    """Stack for one domain; `delay_bound` defaults to the domain's diameter"""
    if delay_bound is None:
        delay_bound = knowledge.domain.diameter
    if kind == COMPARATOR_ADAPTIVE:
        return ComparatorAdaptiveStack(knowledge, dim, nu, eps, grad_bound, delay_bound, c, a_multiplier,
                                       cross_check)
    if kind == OGD:
        if learning_rate is None:
            raise ConfigurationError('the ogd learner needs a learning_rate')
        return OGDStack(knowledge, dim, learning_rate)
    raise ConfigurationError(f'unknown learner {kind!r}; use one of {STACK_KINDS}')
