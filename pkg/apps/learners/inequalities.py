"""
Numerical checks of the two scalar inequalities the scale learner's
potential argument rests on.
"""
import numpy as np

from apps.core.exceptions import DomainViolation

SLACK = 4 * np.finfo(float).eps


def prod_generalization_gap(x, ys, weights):
    """
    RHS - LHS of

        exp(sum(-y - y^2 - 2 a |y| - 2 |x y|) - x - x^2) <= exp(sum(-y - y^2 - 2 a |y|)) - x

    for |x|, |y_i| <= 1 / (20 (1 + tau)) and a_i in [0, 1/20].
    """
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if ys.shape != weights.shape:
        raise DomainViolation(f'{len(ys)} values y but {len(weights)} weights a')
    radius = 1.0 / (20.0 * (1 + len(ys)))
    if abs(x) > radius or (len(ys) and np.abs(ys).max() > radius):
        raise DomainViolation(f'x and every y must lie in [-{radius:.6g}, {radius:.6g}] for tau={len(ys)}')
    if len(weights) and (weights.min() < 0 or weights.max() > 1 / 20):
        raise DomainViolation('weights a must lie in [0, 1/20]')

    base = float(np.sum(-ys - ys ** 2 - 2 * weights * np.abs(ys)))
    lhs = np.exp(base - 2 * abs(x) * float(np.abs(ys).sum()) - x - x * x)
    rhs = np.exp(base) - x
    return float(rhs - lhs)


def prod_generalization_check(x, ys, weights):
    gap = prod_generalization_gap(x, ys, weights)
    return gap >= -SLACK * max(1.0, abs(gap))


def concavity_check(ys, grid=None):
    """
    Largest second difference of x -> exp(-f(x)) with
    f(x) = x + x^2 + sum(y + y^2 + 2 |x| |y|) over a grid of [-1/10, 1/10];
    non-positive (up to rounding) when |y_i| <= 1 / (10 tau).
    """
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    if len(ys):
        radius = 1.0 / (10 * len(ys))
        if np.abs(ys).max() > radius:
            raise DomainViolation(f'every y must lie in [-{radius:.6g}, {radius:.6g}] for tau={len(ys)}')
    if grid is None:
        grid = np.linspace(-0.1, 0.1, 401)
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) < 3:
        raise DomainViolation('concavity check needs at least three grid points')
    spread = float(np.abs(ys).sum())
    values = np.exp(-(grid + grid ** 2 + float(np.sum(ys + ys ** 2)) + 2 * np.abs(grid) * spread))
    left, middle, right = values[:-2], values[1:-1], values[2:]
    h_left = grid[1:-1] - grid[:-2]
    h_right = grid[2:] - grid[1:-1]
    # divided differences, so uneven grids are fine
    second = 2 * ((right - middle) / h_right - (middle - left) / h_left) / (h_left + h_right)
    return float(second.max())
