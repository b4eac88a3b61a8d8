"""
Truncated Gaussian integrals behind the scale learner.

With rho(eta) proportional to exp(-eta^2) on [0, a], both the prediction and
the potential reduce to

    I0(L, V) = int_0^a exp(-L eta - V eta^2) d eta
    I1(L, V) = int_0^a eta exp(-L eta - V eta^2) d eta

for V >= 1. The closed forms below go through the scaled complementary error
function so that large |L| / sqrt(V) neither overflows nor cancels.
"""
import math

import numpy as np
from scipy import integrate, special

from apps.core.exceptions import NumericalInstability

SQRT_PI = math.sqrt(math.pi)


def ln_plus(x):
    """ln(max(e, x))"""
    return math.log(max(math.e, x))


def normalizer(a):
    """Z = int_0^a exp(-eta^2) d eta"""
    return SQRT_PI / 2 * special.erf(a)


def gaussian_moments(L, V, a):
    """(I0, I1) in closed form"""
    if V <= 0:
        raise NumericalInstability(f'V must be positive, got {V}')
    root = math.sqrt(V)
    x0 = L / (2 * root)
    x1 = x0 + a * root
    exponent = -(a * L + a * a * V)

    with np.errstate(over='raise', invalid='raise'):
        try:
            if x0 >= 0:
                scaled = special.erfcx(x0) - math.exp(exponent) * special.erfcx(x1)
            elif x1 <= 0:
                scaled = math.exp(exponent) * special.erfcx(-x1) - special.erfcx(-x0)
            else:
                scaled = math.exp(x0 * x0) * (special.erf(x1) - special.erf(x0))
        except (OverflowError, FloatingPointError) as exc:
            raise NumericalInstability(f'closed form overflows at L={L:.6g}, V={V:.6g}, a={a:.6g}') from exc

    i0 = SQRT_PI / (2 * root) * scaled
    i1 = -math.expm1(exponent) / (2 * V) - L / (2 * V) * i0
    if not (math.isfinite(i0) and math.isfinite(i1)):
        raise NumericalInstability(f'closed form is not finite at L={L:.6g}, V={V:.6g}, a={a:.6g}')
    return i0, max(i1, 0.0)


def quadrature_moments(L, V, a):
    """(I0, I1) by adaptive quadrature with the integrand rescaled by its maximum"""
    peak = min(max(-L / (2 * V), 0.0), a)
    shift = -(L * peak + V * peak * peak)
    width = min(1 / math.sqrt(2 * V), 1 / abs(L) if L else math.inf)
    hints = sorted({p for p in (peak, peak - 8 * width, peak + 8 * width, peak + 40 * width) if 0 < p < a})

    def weight(eta):
        return math.exp(-L * eta - V * eta * eta - shift)

    options = dict(epsabs=0.0, epsrel=1e-11, limit=500, points=hints or None)
    i0, _ = integrate.quad(weight, 0.0, a, **options)
    i1, _ = integrate.quad(lambda eta: eta * weight(eta), 0.0, a, **options)
    try:
        scale = math.exp(shift)
    except OverflowError as exc:
        raise NumericalInstability(f'quadrature overflows at L={L:.6g}, V={V:.6g}') from exc
    return i0 * scale, i1 * scale


def relative_gap(x, y):
    return abs(x - y) / max(abs(x), abs(y), np.finfo(float).tiny)
