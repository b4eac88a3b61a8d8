import numpy as np


class GrowableArray:
    """Append-only numpy buffer with amortised doubling"""

    def __init__(self, tail_shape=(), dtype=np.float64, capacity=64):
        self._data = np.zeros((capacity,) + tuple(tail_shape), dtype=dtype)
        self._size = 0

    def __len__(self):
        return self._size

    def append(self, value):
        if self._size == len(self._data):
            grown = np.zeros((2 * len(self._data),) + self._data.shape[1:], dtype=self._data.dtype)
            grown[:self._size] = self._data
            self._data = grown
        self._data[self._size] = value
        self._size += 1
        return self._size - 1

    def view(self):
        return self._data[:self._size]

    def __getitem__(self, item):
        return self.view()[item]
