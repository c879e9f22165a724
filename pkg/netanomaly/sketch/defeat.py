"""
Sketch-subspace detection and identification.

Every router summarizes its flows into m histogram-sketches per feature: the 42-bit key made of
the leading 21 bits of SIP and DIP selects a bucket under each hash function, and the bucket
accumulates the packet histogram of the feature. Summing the local sketches gives the global
ones. For hash function j the entropies of all buckets of all features form one multi-way
matrix, on which the subspace method votes; an anomaly is declared when at least l of the m
votes agree. Flows are identified by intersecting, over the voting hash functions, the keys
that fell into the anomalous buckets.
"""
import dataclasses
import logging
import math
from collections import Counter, defaultdict
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.core.records import FlowRecord, int_to_ip
from netanomaly.core.traffic import DEFAULT_BIN_WIDTH, Histogram, time_bin
from netanomaly.errors import ConfigError, ContractError
from netanomaly.pca.entropy import ENTROPY_FEATURES, sample_entropy
from netanomaly.pca.subspace import (
    default_directions, fit_pca, greedy_identify, spe_detect, split_subspace,
)
from netanomaly.sketch.hashing import PolynomialHash, hash_family
from netanomaly.utils.logs import timelogger

logger = logging.getLogger(__name__)


PREFIX_BITS = 21
_PREFIX_MASK = (1 << PREFIX_BITS) - 1


@dataclasses.dataclass(frozen=True)
class DefeatConfig:
    m: int = 4                  # hash functions (sketches per feature)
    s: int = 8                  # sketch size
    l: int = 3                  # votes needed
    features: tuple[str, ...] = ENTROPY_FEATURES
    alpha: float = 0.001
    k: Optional[int] = None     # None: 3σ rule on the training bins
    training_bins: Optional[int] = None     # None: first half of the bins
    bin_width: float = DEFAULT_BIN_WIDTH
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.l <= self.m:
            raise ConfigError(f'the vote threshold must satisfy 1 ≤ l ≤ m (l={self.l}, m={self.m})')
        if self.s < 2:
            raise ConfigError('sketch size s ≥ 2')
        unknown = set(self.features) - set(ENTROPY_FEATURES)
        if unknown or not self.features:
            raise ConfigError(f'features must be a non-empty subset of {ENTROPY_FEATURES}')


def hash_key(record: FlowRecord) -> int:
    """Leading 21 bits of SIP followed by the leading 21 bits of DIP."""
    return ((record.sip >> (32 - PREFIX_BITS)) << PREFIX_BITS) | (record.dip >> (32 - PREFIX_BITS))


def format_hash_key(key: int) -> str:
    sip = (key >> PREFIX_BITS) << (32 - PREFIX_BITS)
    dip = (key & _PREFIX_MASK) << (32 - PREFIX_BITS)
    return f'{int_to_ip(sip)}/{PREFIX_BITS}>{int_to_ip(dip)}/{PREFIX_BITS}'


# (time bin, hash function, feature, bucket) → histogram
_SketchCells = dict[tuple[int, int, str, int], Counter]


def local_sketches(records: Sequence[FlowRecord], hashes: Sequence[PolynomialHash], features: Sequence[str],
                   t0: float, bin_width: float) -> tuple[_SketchCells, dict[tuple[int, int, int], set[int]]]:
    cells: _SketchCells = defaultdict(Counter)
    keys: dict[tuple[int, int, int], set[int]] = defaultdict(set)
    for record in records:
        t = time_bin(record.t, t0, bin_width)
        key = hash_key(record)
        for j, h in enumerate(hashes):
            bucket = h(key)
            keys[(t, j, bucket)].add(key)
            for feature in features:
                cells[(t, j, feature, bucket)][record.feature(feature)] += record.packets   # type: ignore[arg-type]
    return cells, keys


@dataclasses.dataclass(frozen=True)
class DefeatResult:
    alarms: list[Alarm]
    votes: np.ndarray           # time × m bit matrix


def defeat_pipeline(per_router_records: Mapping[Hashable, Sequence[FlowRecord]], config: DefeatConfig) -> DefeatResult:
    all_records = [r for records in per_router_records.values() for r in records]
    if not all_records:
        raise ContractError('records non-empty')
    t0 = math.floor(min(r.t for r in all_records) / config.bin_width) * config.bin_width
    n_bins = max(time_bin(r.t, t0, config.bin_width) for r in all_records) + 1
    if n_bins < 2:
        raise ContractError('at least 2 time bins')
    hashes = hash_family(config.m, config.s, config.seed)

    global_cells: _SketchCells = defaultdict(Counter)
    bucket_keys: dict[tuple[int, int, int], set[int]] = defaultdict(set)
    with timelogger(logger, f'Histogram-sketches of {len(per_router_records)} routers'):
        for records in per_router_records.values():
            cells, keys = local_sketches(records, hashes, config.features, t0, config.bin_width)
            for cell, histogram in cells.items():
                global_cells[cell].update(histogram)
            for bucket, seen in keys.items():
                bucket_keys[bucket] |= seen

    training = config.training_bins or max(n_bins // 2, 2)
    if training > n_bins:
        raise ContractError(f'training_bins ≤ number of bins ({n_bins})')
    votes = np.zeros((n_bins, config.m), dtype=bool)
    suspects: dict[tuple[int, int], set[int]] = {}
    for j in range(config.m):
        matrix = _entropy_matrix(global_cells, j, n_bins, config)
        means = matrix[:training].mean(axis=0)
        scales = matrix[:training].std(axis=0)
        scales[scales == 0] = 1.0
        x = (matrix - means) / scales
        model = fit_pca(x[:training], means, scales)
        if model.n < 2:
            raise ConfigError('need at least two sketch columns')
        model = model.with_k(config.k if config.k is not None
                             else split_subspace(x[:training], model, require_residual=True))
        columns = [f'{feature}:{b}' for feature in config.features for b in range(config.s)]
        directions = default_directions(columns)
        for t in range(n_bins):
            if spe_detect(x[t], model, config.alpha).alarm:
                votes[t, j] = True
                buckets = {index % config.s for index in greedy_identify(x[t], model, directions, config.alpha)}
                suspects[(t, j)] = set().union(*(bucket_keys.get((t, j, b), set()) for b in buckets))

    alarms = []
    for t in range(n_bins):
        count = int(votes[t].sum())
        if count >= config.l:
            key_sets = [suspects[(t, j)] for j in range(config.m) if votes[t, j]]
            keys = set.intersection(*key_sets) if key_sets else set()
            alarms.append(Alarm(t_index=t, detector='defeat', score=count, threshold=config.l,
                                keys=tuple(format_hash_key(k) for k in sorted(keys))))
    logger.info(f'Defeat raised {len(alarms)} alarms over {n_bins} bins')
    return DefeatResult(alarms=alarms, votes=votes)


def _entropy_matrix(cells: _SketchCells, j: int, n_bins: int, config: DefeatConfig) -> np.ndarray:
    matrix = np.zeros((n_bins, len(config.features) * config.s))
    for t in range(n_bins):
        for f, feature in enumerate(config.features):
            for b in range(config.s):
                counts = cells.get((t, j, feature, b))
                if counts:
                    matrix[t, f * config.s + b] = sample_entropy(Histogram(feature=feature, counts=dict(counts)))   # type: ignore[arg-type]
    return matrix
