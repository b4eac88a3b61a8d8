"""
Encoder descriptions and the derived quantities learners are tuned with.
"""
import math
from dataclasses import asdict, dataclass, field

from apps.core.exceptions import BudgetTooSmall, ConfigurationError

DETERMINISTIC_GRID = 'deterministic_grid'
SPARSIFIED_QUANTIZATION = 'sparsified_quantization'
ENCODER_KINDS = (DETERMINISTIC_GRID, SPARSIFIED_QUANTIZATION)


def index_bits(dim):
    """Bits needed to name one of `dim` coordinates"""
    return math.ceil(math.log2(dim)) if dim > 1 else 0


@dataclass(frozen=True)
class EncoderSpec:
    kind: str
    dim: int
    grad_bound: float
    bits_per_gradient: int
    precision: int = field(default=None)

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ConfigurationError(f'unknown encoder kind {self.kind!r}; use one of {ENCODER_KINDS}')
        if self.dim < 1:
            raise ConfigurationError('dimension must be at least 1')
        if not self.grad_bound > 0:
            raise ConfigurationError('gradient bound G must be positive')
        if self.kind == DETERMINISTIC_GRID:
            if self.bits_per_gradient < self.dim:
                raise BudgetTooSmall(
                    f'deterministic encoding needs k >= d bits; got k={self.bits_per_gradient}, d={self.dim}. '
                    'Raise the bit budget b or lower the dimension.'
                )
        else:
            if self.precision is None:
                object.__setattr__(self, 'precision', index_bits(self.dim))
            if self.precision < 0:
                raise ConfigurationError('precision p must be non-negative')
            if self.repetitions < 1:
                raise BudgetTooSmall(
                    f'sparsified quantization needs k >= {self.repetition_bits} bits '
                    f'(index {index_bits(self.dim)} + sign 1 + precision {self.precision} + correction 1); '
                    f'got k={self.bits_per_gradient}'
                )

    @classmethod
    def deterministic(cls, dim, grad_bound, bits_per_gradient):
        return cls(DETERMINISTIC_GRID, dim, float(grad_bound), int(bits_per_gradient))

    @classmethod
    def stochastic(cls, dim, grad_bound, bits_per_gradient, precision=None):
        return cls(SPARSIFIED_QUANTIZATION, dim, float(grad_bound), int(bits_per_gradient), precision)

    @property
    def is_deterministic(self):
        return self.kind == DETERMINISTIC_GRID

    @property
    def cell_bits(self):
        """q = floor(k / d), bits per coordinate of the grid encoder"""
        return self.bits_per_gradient // self.dim

    @property
    def repetition_bits(self):
        return index_bits(self.dim) + self.precision + 2

    @property
    def repetitions(self):
        if self.is_deterministic:
            return None
        return self.bits_per_gradient // self.repetition_bits

    @property
    def payload_bits(self):
        if self.is_deterministic:
            return self.dim * self.cell_bits
        return self.repetitions * self.repetition_bits

    @property
    def error_bound(self):
        """epsilon: worst-case distance between a vector and its decoding"""
        if self.is_deterministic:
            return math.sqrt(self.dim) * 2.0 ** (-self.cell_bits) * self.grad_bound
        return 0.0

    @property
    def decoded_norm_bound(self):
        if self.is_deterministic:
            return self.grad_bound + self.error_bound
        return 2 * self.dim * self.grad_bound

    def as_dict(self):
        data = asdict(self)
        data.update(
            payload_bits=self.payload_bits,
            repetitions=self.repetitions,
            error_bound=self.error_bound,
            decoded_norm_bound=self.decoded_norm_bound,
        )
        return data


def spec_for_budget(kind, dim, grad_bound, bit_budget, horizon, precision=None):
    """Per-gradient spec when a b-bit round budget is shared over `horizon` payloads"""
    k = bit_budget // horizon
    if kind == DETERMINISTIC_GRID:
        return EncoderSpec.deterministic(dim, grad_bound, k)
    return EncoderSpec.stochastic(dim, grad_bound, k, precision)
