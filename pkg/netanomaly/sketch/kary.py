"""
The k-ary sketch: H rows (one per hash function) of K buckets.

A key's value is added to one bucket per row, so every row sums to the stream total.
Per-key values and the second moment F₂ = Σ v_a² are estimated without bias by correcting
each row for the expected collision mass (sum/K) and taking the median over rows.
"""
import logging
from typing import Iterable, Sequence

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.sketch.hashing import PolynomialHash, hash_family

logger = logging.getLogger(__name__)


DEFAULT_ROWS = 5
DEFAULT_BUCKETS = 1024


class KarySketch:
    __slots__ = 'hashes', 'table'

    def __init__(self, hashes: Sequence[PolynomialHash], table: np.ndarray | None = None):
        if not hashes:
            raise ContractError('a sketch needs at least one hash function')
        widths = {h.width for h in hashes}
        if len(widths) != 1 or min(widths) < 2:
            raise ContractError('all hash functions must share one width K ≥ 2')
        self.hashes = tuple(hashes)
        self.table = np.zeros((len(hashes), self.hashes[0].width)) if table is None else np.array(table, dtype=float)
        if self.table.shape != (self.H, self.K):
            raise ContractError(f'table shape {self.table.shape} does not match H={self.H}, K={self.K}')

    @classmethod
    def empty(cls, rows: int = DEFAULT_ROWS, buckets: int = DEFAULT_BUCKETS, seed: int = 0) -> 'KarySketch':
        return cls(hash_family(rows, buckets, seed))

    @property
    def H(self) -> int:
        return len(self.hashes)

    @property
    def K(self) -> int:
        return self.hashes[0].width

    def buckets(self, key: int) -> list[int]:
        return [h(key) for h in self.hashes]

    def update(self, key: int, value: float):
        for row, bucket in enumerate(self.buckets(key)):
            self.table[row, bucket] += value

    def total(self) -> float:
        return float(self.table[0].sum())

    def estimate(self, key: int) -> float:
        total = self.total()
        per_row = [
            (self.table[row, bucket] - total / self.K) / (1.0 - 1.0 / self.K)
            for row, bucket in enumerate(self.buckets(key))
        ]
        return float(np.median(per_row))

    def estimate_f2(self) -> float:
        K = self.K
        sums = self.table.sum(axis=1)
        per_row = K / (K - 1) * (self.table ** 2).sum(axis=1) - sums ** 2 / (K - 1)
        return float(np.median(per_row))

    def compatible(self, other: 'KarySketch') -> bool:
        return self.hashes == other.hashes

    def _check_compatible(self, other: 'KarySketch'):
        if not self.compatible(other):
            raise ContractError('sketches must share H, K and hash seeds')

    def with_table(self, table: np.ndarray) -> 'KarySketch':
        return KarySketch(self.hashes, table)

    def __add__(self, other: 'KarySketch') -> 'KarySketch':
        self._check_compatible(other)
        return self.with_table(self.table + other.table)

    def __sub__(self, other: 'KarySketch') -> 'KarySketch':
        self._check_compatible(other)
        return self.with_table(self.table - other.table)

    def __repr__(self):
        return f'KarySketch(H={self.H}, K={self.K}, total={self.total():g})'


def sketch_update(sketch: KarySketch, key: int, value: float):
    sketch.update(key, value)


def sketch_estimate(sketch: KarySketch, key: int) -> float:
    return sketch.estimate(key)


def sketch_estimate_f2(sketch: KarySketch) -> float:
    return sketch.estimate_f2()


def sketch_stream(items: Iterable[tuple[int, float]], rows: int = DEFAULT_ROWS, buckets: int = DEFAULT_BUCKETS,
                  seed: int = 0) -> KarySketch:
    sketch = KarySketch.empty(rows, buckets, seed)
    for key, value in items:
        sketch.update(key, value)
    return sketch
