"""
Bit-exact gradient encoders.

Payloads are strings of '0'/'1', big-endian, coordinate-major. The grid
encoder sends a cell index per coordinate; sparsified quantization sends m
independent repetitions of (coordinate index, sign, truncated magnitude,
Bernoulli correction bit).
"""
import math

import numpy as np

from apps.core.exceptions import ConfigurationError, NoCollisionFound, NormExceeded, ProtocolViolation
from apps.core.seeding import ENCODER_STREAM, derive_rng

from .specs import index_bits

NORM_TOLERANCE = 1e-12


def _uint_bits(value, width):
    return format(value, f'0{width}b') if width else ''


def _as_vector(x, spec, check_norm=True):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (spec.dim,):
        raise ConfigurationError(f'expected a {spec.dim}-vector, got shape {x.shape}')
    if check_norm and np.linalg.norm(x) > spec.grad_bound * (1 + NORM_TOLERANCE):
        raise NormExceeded(f'gradient norm {np.linalg.norm(x):.6g} exceeds G = {spec.grad_bound:.6g}')
    return x


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def encode_deterministic(x, spec, check_norm=True):
    x = _as_vector(x, spec, check_norm)
    q = spec.cell_bits
    cells = 2 ** q
    width = 2 * spec.grad_bound / cells
    payload = []
    for value in x:
        cell = int(math.floor((value + spec.grad_bound) / width))
        payload.append(_uint_bits(min(max(cell, 0), cells - 1), q))
    return ''.join(payload)


def decode_deterministic(bits, spec):
    q = spec.cell_bits
    if len(bits) != spec.dim * q:
        raise ProtocolViolation(f'grid payload has {len(bits)} bits, expected {spec.dim * q}')
    width = 2 * spec.grad_bound / 2 ** q
    cells = [int(bits[j * q:(j + 1) * q], 2) for j in range(spec.dim)]
    return -spec.grad_bound + (np.asarray(cells, dtype=np.float64) + 0.5) * width


def _quantize_magnitude(value, spec):
    """(truncated level, Bernoulli probability) for one coordinate"""
    levels = 2 ** spec.precision
    scaled = abs(value) * levels / spec.grad_bound
    level = min(int(math.floor(scaled)), levels - 1)
    return level, min(max(scaled - level, 0.0), 1.0)


def encode_stochastic(x, spec, rng):
    x = _as_vector(x, spec)
    rng = _as_generator(rng)
    width = index_bits(spec.dim)
    payload = []
    for _ in range(spec.repetitions):
        i = int(rng.integers(spec.dim))
        level, prob = _quantize_magnitude(x[i], spec)
        correction = 1 if rng.random() < prob else 0
        payload.append(
            _uint_bits(i, width)
            + ('1' if x[i] < 0 else '0')
            + _uint_bits(level, spec.precision)
            + str(correction)
        )
    return ''.join(payload)


def decode_stochastic(bits, spec):
    size = spec.repetition_bits
    if len(bits) != spec.repetitions * size:
        raise ProtocolViolation(f'quantized payload has {len(bits)} bits, expected {spec.repetitions * size}')
    width = index_bits(spec.dim)
    step = spec.grad_bound / 2 ** spec.precision
    decoded = np.zeros(spec.dim)
    for r in range(spec.repetitions):
        chunk = bits[r * size:(r + 1) * size]
        i = int(chunk[:width], 2) if width else 0
        if i >= spec.dim:
            raise ProtocolViolation(f'coordinate index {i} out of range for d={spec.dim}')
        sign = -1.0 if chunk[width] == '1' else 1.0
        level = int(chunk[width + 1:width + 1 + spec.precision], 2) if spec.precision else 0
        correction = int(chunk[-1])
        decoded[i] += spec.dim * sign * (level + correction) * step
    return decoded / spec.repetitions


def repetition_distribution(x, spec):
    """Exact outcomes (probability, decoded vector) of a single repetition"""
    x = _as_vector(x, spec)
    step = spec.grad_bound / 2 ** spec.precision
    outcomes = []
    for i in range(spec.dim):
        level, prob = _quantize_magnitude(x[i], spec)
        sign = -1.0 if x[i] < 0 else 1.0
        for correction, weight in ((0, 1.0 - prob), (1, prob)):
            if weight == 0.0:
                continue
            vector = np.zeros(spec.dim)
            vector[i] = spec.dim * sign * (level + correction) * step
            outcomes.append((weight / spec.dim, vector))
    return outcomes


def variance_bound(spec):
    """(alpha, beta) with E||x_hat - x||^2 <= alpha ||x||^2 + beta"""
    if spec.is_deterministic:
        raise ConfigurationError('variance bound applies to sparsified quantization only')
    if spec.precision < index_bits(spec.dim):
        raise ConfigurationError(
            f'variance bound needs precision p >= ceil(log2 d) = {index_bits(spec.dim)}'
        )
    m = spec.repetitions
    return 2 * spec.dim / m, spec.grad_bound ** 2 / m


def encode(x, spec, rng=None, check_norm=True):
    if spec.is_deterministic:
        return encode_deterministic(x, spec, check_norm)
    return encode_stochastic(x, spec, rng)


def decode(bits, spec):
    if spec.is_deterministic:
        return decode_deterministic(bits, spec)
    return decode_stochastic(bits, spec)


def sample_ball(rng, dim, radius, size):
    """Uniform points in the centred Euclidean ball"""
    directions = rng.normal(size=(size, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(size) ** (1.0 / dim)
    return directions * radii[:, None]


def find_collision(spec, samples=4096, seed=0, encoder=None):
    """
    Birthday search: encode random points of the G-ball and return the most
    distant pair (g, h) sharing a payload. `encoder` defaults to the grid
    encoder of `spec`.
    """
    encoder = encoder or (lambda x: encode_deterministic(x, spec))
    rng = np.random.default_rng(seed)
    buckets = {}
    for point in sample_ball(rng, spec.dim, spec.grad_bound, samples):
        buckets.setdefault(encoder(point), []).append(point)

    best = None
    for points in buckets.values():
        if len(points) < 2:
            continue
        group = np.asarray(points)
        gaps = np.linalg.norm(group[:, None, :] - group[None, :, :], axis=-1)
        i, j = np.unravel_index(gaps.argmax(), gaps.shape)
        if best is None or gaps[i, j] > best[2]:
            best = (group[i], group[j], float(gaps[i, j]))
    if best is None or best[2] <= 0.0:
        raise NoCollisionFound(f'no two of {samples} samples share a payload')
    return best


class GradientCodec:
    """
    Encoder bound to one run. Stochastic encodings draw from a generator
    derived from (master seed, round), so any round replays on its own.
    """

    def __init__(self, spec, master_seed=0):
        self.spec = spec
        self.master_seed = master_seed

    def encode(self, x, t):
        if self.spec.is_deterministic:
            return encode_deterministic(x, self.spec)
        return encode_stochastic(x, self.spec, derive_rng(self.master_seed, ENCODER_STREAM, t))

    def decode(self, bits):
        return decode(bits, self.spec)
