from dataclasses import dataclass

import numpy as np


def bits_to_hex(bits):
    """Hex form of a big-endian bit string, prefixed with its bit length"""
    if not bits:
        return '0:'
    width = (len(bits) + 3) // 4
    return f'{len(bits)}:{int(bits, 2):0{width}x}'


def hex_to_bits(text):
    length, _, digits = text.partition(':')
    length = int(length)
    if length == 0:
        return ''
    return format(int(digits, 16), f'0{length}b')


@dataclass(eq=False)
class GradientRecord:
    """
    One round's gradient as it travels through the network.

    Issue time and origin travel out of band; only `payload` is charged to
    the bit budget.
    """
    issue_time: int
    origin: int
    true_gradient: np.ndarray
    payload: str
    decoded_gradient: np.ndarray

    @property
    def payload_bits(self):
        return len(self.payload)

    @property
    def payload_hex(self):
        return bits_to_hex(self.payload)
