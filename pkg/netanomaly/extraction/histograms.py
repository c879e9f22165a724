"""
Histogram clones: k histograms of one flow feature, each placing the feature values into
m bins with its own random hash function.
"""
import dataclasses
import logging
import math
from typing import Iterable, Sequence

import numpy as np

from netanomaly.core.records import Feature, FlowRecord
from netanomaly.core.traffic import time_bin
from netanomaly.errors import ContractError, DegenerateDataError
from netanomaly.sketch.hashing import PolynomialHash, hash_family

logger = logging.getLogger(__name__)


NORMALIZATION_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class HistogramClone:
    m: int
    seed: int
    bins: np.ndarray

    def __post_init__(self):
        if self.m < 2:
            raise ContractError('a histogram clone needs m ≥ 2 bins')
        if self.bins.shape != (self.m,) or np.any(self.bins < 0):
            raise ContractError(f'a histogram clone holds {self.m} nonnegative counts')

    @property
    def hash(self) -> PolynomialHash:
        return clone_hash(self.m, self.seed)

    @property
    def total(self) -> float:
        return float(self.bins.sum())


def clone_hash(m: int, seed: int) -> PolynomialHash:
    return hash_family(1, m, seed)[0]


def clone_seeds(k: int, seed: int) -> list[int]:
    """Seeds of k clones, all derived from one run seed."""
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2 ** 32, size=k)]


def clone_histograms(values: Iterable[tuple[int, int]], m: int, seeds: Sequence[int]) -> list[HistogramClone]:
    """One clone per seed over (feature value, packets) pairs."""
    hashes = [clone_hash(m, s) for s in seeds]
    bins = np.zeros((len(seeds), m))
    for value, packets in values:
        for c, h in enumerate(hashes):
            bins[c, h(value)] += packets
    return [HistogramClone(m=m, seed=s, bins=bins[c]) for c, s in enumerate(seeds)]


def clone_series(
        records: Sequence[FlowRecord],
        feature: Feature,
        m: int,
        seeds: Sequence[int],
        bin_width: float,
        t0: float,
        intervals: int,
) -> np.ndarray:
    """Packet counts per clone, interval and bin (k × intervals × m)."""
    per_interval: list[list[tuple[int, int]]] = [[] for _ in range(intervals)]
    for r in records:
        i = time_bin(r.t, t0, bin_width)
        if 0 <= i < intervals:
            per_interval[i].append((r.feature(feature), r.packets))
    return np.stack([
        np.stack([clone.bins for clone in clone_histograms(values, m, seeds)])
        for values in per_interval
    ], axis=1)


def distribution(counts: np.ndarray, smoothing: float = 0.0) -> np.ndarray:
    """Counts (plus `smoothing` per bin) normalized to a probability distribution."""
    counts = np.asarray(counts, dtype=float) + smoothing
    total = float(counts.sum())
    if total <= 0:
        raise DegenerateDataError('empty histogram')
    return counts / total


def kl_distance(p: np.ndarray, q: np.ndarray) -> float:
    """D(p‖q) = Σ p_i log2(p_i / q_i) in bits; infinite when q_i = 0 < p_i."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ContractError('p and q must cover the same bins')
    for name, d in (('p', p), ('q', q)):
        if np.any(d < 0) or abs(float(d.sum()) - 1.0) > NORMALIZATION_TOLERANCE:
            raise ContractError(f'{name} must be a normalized distribution (sum {float(d.sum()):.12g})')
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    return float(np.sum(p[support] * np.log2(p[support] / q[support])))
