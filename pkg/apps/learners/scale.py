"""
Comparator-adaptive scale learner on a graph.

Plays v_t = E_{eta ~ rho}[nu exp(-L eta - (V - 1) eta^2) eta] with rho the
density proportional to exp(-eta^2) on [0, a], where L and V collect the
shifted feedback h_s + eps available at the active node together with the
delay corrections zeta.
"""
import logging
import math

import numpy as np
from django.conf import settings

from apps.core.exceptions import ConfigurationError, NumericalInstability

from .accumulators import DelayedSum
from .integrals import gaussian_moments, normalizer, quadrature_moments, relative_gap

logger = logging.getLogger(__name__)

CROSS_CHECK_TOLERANCE = 1e-6


def integration_limit(grad_bound, eps, delay_bound, a_multiplier=1.0):
    """a = 1 / ((G + eps) 20 (1 + 2D)), scaled by `a_multiplier`"""
    scale = (grad_bound + eps) * 20.0 * (1 + 2 * delay_bound)
    if not math.isfinite(scale) or scale <= 0:
        raise ConfigurationError(
            f'cannot tune the scale learner: (G + eps) * 20 * (1 + 2D) = {scale!r} '
            f'for G={grad_bound}, eps={eps}, D={delay_bound}'
        )
    a = a_multiplier / scale
    if not a > np.finfo(float).eps:
        raise ConfigurationError(
            f'integration limit a = {a!r} is below machine precision; '
            'the gradient bound or delay bound is too large for this learner'
        )
    return a


def _moments(L, V, a, cross_check):
    i0, i1 = gaussian_moments(L, V, a)
    if cross_check:
        q0, q1 = quadrature_moments(L, V, a)
        gap = max(relative_gap(i0, q0), relative_gap(i1, q1))
        if gap > CROSS_CHECK_TOLERANCE:
            raise NumericalInstability(
                f'closed form and quadrature disagree by {gap:.3g} at L={L:.6g}, V={V:.6g}, a={a:.6g}'
            )
    return i0, i1


def scale_predict(totals, nu, a, cross_check=False):
    """v from accumulated totals (see `DelayedTotals`)"""
    if nu == 0:
        return 0.0
    _, i1 = _moments(totals.linear, 1.0 + totals.lag, a, cross_check)
    return nu / normalizer(a) * i1


def potential_value(totals, nu, a, cross_check=False):
    """Phi = E_rho[nu exp(-L eta - (V - 1) eta^2)] over the totals of every issued gradient"""
    if nu == 0:
        return 0.0
    i0, _ = _moments(totals.linear, 1.0 + totals.lag, a, cross_check)
    return nu / normalizer(a) * i0


class ScaleLearner:

    def __init__(self, knowledge, nu, eps, grad_bound, delay_bound, a_multiplier=1.0, cross_check=None):
        if nu < 0:
            raise ConfigurationError(f'prior mass nu must be non-negative, got {nu}')
        if eps < 0:
            raise ConfigurationError(f'error parameter eps must be non-negative, got {eps}')
        self.knowledge = knowledge
        self.nu = float(nu)
        self.eps = float(eps)
        self.grad_bound = float(grad_bound)
        self.delay_bound = int(delay_bound)
        self.a_multiplier = float(a_multiplier)
        self.a = integration_limit(self.grad_bound, self.eps, self.delay_bound, self.a_multiplier)
        if cross_check is None:
            cross_check = getattr(settings, 'DOCO_QUADRATURE_CHECK', False)
        self.cross_check = cross_check
        self.sums = DelayedSum(knowledge)
        logger.debug('scale learner nu=%.4g eps=%.4g G=%.4g D=%d a=%.6g', self.nu, self.eps,
                     self.grad_bound, self.delay_bound, self.a)

    def __len__(self):
        return len(self.sums)

    def totals(self, view):
        return self.sums.totals(view)

    def predict(self, view):
        return scale_predict(self.totals(view), self.nu, self.a, self.cross_check)

    def update(self, position, h_hat):
        """Record feedback h_hat of the gradient at `position`; returns its full zeta"""
        return self.sums.record(position, h_hat + self.eps)

    def potential(self):
        return potential_value(self.sums.full_totals(), self.nu, self.a, self.cross_check)
