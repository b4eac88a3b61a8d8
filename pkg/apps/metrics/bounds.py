"""
Right-hand sides of the regret guarantees, evaluated on run metadata.

Keys with explicit constants:

* B1  scale learner alone, sum_t (v_t - u) h_t <= B1(u)
* B8  full stack, R_T(u) <= B8(u); also answers T2
* B7  direction learner ceiling 4 sqrt(Lambda + 9 eps G D T) + 2 eps T + 12 G D (analysis only)
* T5  stochastic coding, expected regret

Order-level keys (constant 1 by convention): T3, T6, T7.
"""
import math
from dataclasses import dataclass

from apps.core.exceptions import ConfigurationError, MissingMetadata
from apps.learners.integrals import ln_plus


@dataclass(frozen=True)
class BoundValue:
    key: str
    value: float
    order_level: bool = False

    def as_dict(self):
        return {'key': self.key, 'value': self.value, 'order_level': self.order_level}


def _require(params, *names):
    missing = [name for name in names if params.get(name) is None]
    if missing:
        raise MissingMetadata(f'bound needs run metadata {", ".join(missing)}')
    return [params[name] for name in names]


def scale_learner_bound(u, nu, eps, grad_bound, delay_bound, T, lag_h):
    """nu + 2uT eps + u max{264 G D ln+(312 u G D / nu), sqrt(8 (lag_h + 24 T G eps + 1) ln+(2036 u^2 T D G^2 / nu^2))}"""
    u = abs(u)
    if u == 0:
        return nu
    D = max(delay_bound, 1)
    first = 264 * grad_bound * D * ln_plus(312 * u * grad_bound * D / nu)
    second = math.sqrt(8 * (lag_h + 24 * T * grad_bound * eps + 1)
                       * ln_plus(2036 * u ** 2 * T * D * grad_bound ** 2 / nu ** 2))
    return nu + 2 * u * T * eps + u * max(first, second)


def direction_ceiling(eps, grad_bound, delay_bound, T, true_lag):
    return 4 * math.sqrt(true_lag + 9 * eps * grad_bound * delay_bound * T) + 2 * eps * T \
        + 12 * grad_bound * delay_bound


def full_stack_bound(u, nu, eps, grad_bound, delay_bound, T, true_lag):
    """nu + |u| B(T) for the scale learner combined with a delay-tolerant direction learner"""
    u = abs(u)
    if u == 0:
        return nu
    D = max(delay_bound, 1)
    G = grad_bound
    budget = (
        4 * eps * T
        + math.sqrt(8 * (true_lag + 24 * eps * G * D * T + 1) * ln_plus(2036 * u ** 2 * D * G ** 2 * T / nu ** 2))
        + 4 * math.sqrt(true_lag + 9 * eps * G * D * T)
        + 276 * G * D * ln_plus(312 * u * G * D / nu)
    )
    return nu + u * budget


def stochastic_coding_bound(u, nu, dim, grad_bound, delay_bound, T, lag_hat):
    """nu + u [sqrt(47 (lag_hat + 1) ln+(8144 u^2 T d^2 G^2 / nu^2)) + 552 d G D ln+(624 u d G D / nu)]"""
    u = abs(u)
    if u == 0:
        return nu
    D = max(delay_bound, 1)
    G = grad_bound
    return nu + u * (
        math.sqrt(47 * (lag_hat + 1) * ln_plus(8144 * u ** 2 * T * dim ** 2 * G ** 2 / nu ** 2))
        + 552 * dim * G * D * ln_plus(624 * u * dim * G * D / nu)
    )


def deterministic_coding_order(u, nu, dim, grad_bound, delay_bound, T, true_lag, bit_budget):
    """nu + u (sqrt(Lambda) + T 2^(-b / (d D)) G)"""
    D = max(delay_bound, 1)
    return nu + abs(u) * (math.sqrt(true_lag) + T * 2.0 ** (-bit_budget / (dim * D)) * grad_bound)


def partition_deterministic_order(cells, dim, grad_bound, bit_budget, collection_size, collection_diameter):
    """
    sum_j |u_j| (sqrt(Lambda_j ln(1 + |Q| D_j |u_j| T_j G)) + 2^(-b / (d D_Q)) T_j G)

    `cells` holds dicts with keys u_norm, lag, diameter, rounds.
    """
    total = 0.0
    for cell in cells:
        u, T_j, D_j = cell['u_norm'], cell['rounds'], max(cell['diameter'], 1)
        total += u * (
            math.sqrt(cell['lag'] * math.log(1 + collection_size * D_j * u * T_j * grad_bound))
            + 2.0 ** (-bit_budget / (dim * collection_diameter)) * T_j * grad_bound
        )
    return total


def partition_stochastic_order(cells, dim, grad_bound, bit_budget, collection_size, collection_diameter):
    """sum_j |u_j| G sqrt((1 + d D_Q / b) D_j T_j ln(1 + |Q| D_j |u_j| T_j G))"""
    total = 0.0
    for cell in cells:
        u, T_j, D_j = cell['u_norm'], cell['rounds'], max(cell['diameter'], 1)
        total += u * grad_bound * math.sqrt(
            (1 + dim * collection_diameter / bit_budget) * D_j * T_j
            * math.log(1 + collection_size * D_j * u * T_j * grad_bound)
        )
    return total


BOUND_KEYS = ('B1', 'B7', 'B8', 'T2', 'T3', 'T5', 'T6', 'T7')


def bound_evaluator(key, params, u=0.0):
    """
    Evaluate bound `key` for comparator norm `u` on run metadata `params`
    (nu, eps, grad_bound, G, delay_bound, T, lag, lag_hat, lag_h, dim,
    bit_budget, cells, collection_size, collection_diameter as needed).
    """
    if key == 'B1':
        nu, eps, G_hat, D, T, lag_h = _require(params, 'nu', 'eps', 'grad_bound', 'delay_bound', 'T', 'lag_h')
        return BoundValue(key, scale_learner_bound(u, nu, eps, G_hat, D, T, lag_h))
    if key == 'B7':
        eps, G, D, T, true_lag = _require(params, 'eps', 'G', 'delay_bound', 'T', 'lag')
        return BoundValue(key, direction_ceiling(eps, G, D, T, true_lag))
    if key in ('B8', 'T2'):
        nu, eps, G, D, T, true_lag = _require(params, 'nu', 'eps', 'G', 'delay_bound', 'T', 'lag')
        return BoundValue(key, full_stack_bound(u, nu, eps, G, D, T, true_lag))
    if key == 'T3':
        nu, dim, G, D, T, true_lag, b = _require(params, 'nu', 'dim', 'G', 'delay_bound', 'T', 'lag', 'bit_budget')
        return BoundValue(key, deterministic_coding_order(u, nu, dim, G, D, T, true_lag, b), order_level=True)
    if key == 'T5':
        nu, dim, G, D, T, lag_hat = _require(params, 'nu', 'dim', 'G', 'delay_bound', 'T', 'lag_hat')
        return BoundValue(key, stochastic_coding_bound(u, nu, dim, G, D, T, lag_hat))
    if key in ('T6', 'T7'):
        cells, dim, G, b, size, D_Q = _require(
            params, 'cells', 'dim', 'G', 'bit_budget', 'collection_size', 'collection_diameter')
        order = partition_deterministic_order if key == 'T6' else partition_stochastic_order
        return BoundValue(key, order(cells, dim, G, b, size, D_Q), order_level=True)
    raise ConfigurationError(f'unknown bound {key!r}; use one of {BOUND_KEYS}')


def decoded_lag_holds(true_lag, lag_hat, eps, grad_bound, delay_bound, T, rtol=1e-9):
    """Lambda_hat <= Lambda + 9 eps G D T, valid when eps <= G"""
    ceiling = true_lag + 9 * eps * grad_bound * max(delay_bound, 1) * T
    return lag_hat <= ceiling * (1 + rtol) + rtol
