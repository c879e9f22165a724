"""
Multi-resolution Gamma detector.

Packets are split into N × M sub-traces by hashing a key with N hash functions into M
buckets. Each sub-trace is binned at a base resolution and aggregated over dyadic levels,
x_2δ(t) = x_δ(t) + x_δ(t + δ). The marginal of every aggregated series is fitted by a Gamma
law Γ(α, β) (shape α, scale β) with moment matching. Because aggregation correlates samples,
the way α and β change across levels describes short-time dependencies; a sub-trace whose
parameters deviate from the reference of its bucket (the other hash functions' outputs for
the same bucket) is anomalous. Keys are identified by intersecting, over all hash functions,
the keys recorded in the alarmed buckets.
"""
import dataclasses
import logging
import math
from collections import defaultdict
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.core.records import FlowRecord
from netanomaly.errors import ConfigError, ContractError, DegenerateDataError
from netanomaly.sketch.hashing import hash_family
from netanomaly.utils.logs import warn_once

logger = logging.getLogger(__name__)


MIN_SAMPLES = 8
# relative spread assumed for a reference made of a single other sketch output
SINGLE_REFERENCE_SPREAD = 0.25


@dataclasses.dataclass(frozen=True)
class MultiResConfig:
    N: int = 8                  # hash functions
    M: int = 32                 # buckets per hash function
    levels: int = 4             # J; level j aggregates 2^j base bins
    base_bin: float = 1.0       # seconds
    lam: float = 3.0            # detection threshold λ
    statistic: Literal['alpha', 'beta', 'both'] = 'alpha'
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ConfigError('N ≥ 1 and M ≥ 1')
        if self.levels < 1:
            raise ConfigError('at least one aggregation level')
        if self.base_bin <= 0:
            raise ConfigError('base bin > 0')
        if self.statistic not in ('alpha', 'beta', 'both'):
            raise ConfigError(f'unknown statistic {self.statistic!r}')

    def level_widths(self) -> list[float]:
        return [self.base_bin * 2 ** j for j in range(self.levels)]


@dataclasses.dataclass(frozen=True)
class Aggregation:
    levels: list[np.ndarray]                        # level j: N × M × T_j
    keys: dict[tuple[int, int], set[int]]           # (n, m) → keys hashed there


def split_and_aggregate(
        records: Sequence[FlowRecord],
        key_of: Callable[[FlowRecord], int],
        config: MultiResConfig,
        t0: Optional[float] = None,
        duration: Optional[float] = None,
) -> Aggregation:
    if not records:
        raise ContractError('records non-empty')
    if t0 is None:
        t0 = min(r.t for r in records)
    if duration is None:
        duration = max(r.t for r in records) - t0 + config.base_bin
    block = 2 ** (config.levels - 1)
    n_base = math.ceil(duration / config.base_bin / block) * block
    if n_base // block < MIN_SAMPLES:
        raise ContractError(
            f'window too short: the coarsest level needs {MIN_SAMPLES} samples, '
            f'i.e. {MIN_SAMPLES * block * config.base_bin:g} seconds'
        )
    hashes = hash_family(config.N, config.M, config.seed)
    base = np.zeros((config.N, config.M, n_base))
    keys: dict[tuple[int, int], set[int]] = defaultdict(set)
    for record in records:
        i = math.floor((record.t - t0) / config.base_bin)
        if not 0 <= i < n_base:
            continue
        key = key_of(record)
        for n, h in enumerate(hashes):
            m = h(key)
            base[n, m, i] += record.packets
            keys[(n, m)].add(key)
    levels = [base]
    for _ in range(1, config.levels):
        previous = levels[-1]
        levels.append(previous[..., 0::2] + previous[..., 1::2])
    return Aggregation(levels=levels, keys=dict(keys))


@dataclasses.dataclass(frozen=True)
class GammaParams:
    alpha: np.ndarray       # shape per level
    beta: np.ndarray        # scale per level

    def __post_init__(self):
        if np.any(self.alpha <= 0) or np.any(self.beta <= 0):
            raise ContractError('Gamma parameters must be positive')


def fit_gamma(series: np.ndarray | Sequence[np.ndarray]) -> GammaParams:
    """Moment matching per level: α = mean²/var and β = var/mean (population moments)."""
    per_level = [np.asarray(series, dtype=float)] if np.ndim(series) == 1 else [np.asarray(s, dtype=float) for s in series]
    alphas, betas = [], []
    for values in per_level:
        if values.size < MIN_SAMPLES:
            raise ContractError(f'a Gamma fit needs at least {MIN_SAMPLES} samples')
        mean = float(values.mean())
        variance = float(values.var())
        if mean <= 0 or variance <= 0:
            raise DegenerateDataError('degenerate series')
        alphas.append(mean * mean / variance)
        betas.append(variance / mean)
    return GammaParams(alpha=np.array(alphas), beta=np.array(betas))


def fit_all(aggregation: Aggregation) -> dict[tuple[int, int], GammaParams]:
    """Gamma parameters of every sub-trace; degenerate (e.g. empty) sub-traces are left out."""
    N, M, _ = aggregation.levels[0].shape
    params = {}
    for n in range(N):
        for m in range(M):
            try:
                params[(n, m)] = fit_gamma([level[n, m] for level in aggregation.levels])
            except DegenerateDataError:
                warn_once(logger, 'Skipping degenerate sub-traces (no traffic or constant rate)')
    return params


def mahalanobis_distance(values: np.ndarray, reference: np.ndarray) -> float:
    """D for one sub-trace: values is J per-level estimates, reference the other hash functions' (R × J)."""
    mean = reference.mean(axis=0)
    if reference.shape[0] == 1:
        variance = (SINGLE_REFERENCE_SPREAD * mean) ** 2
    else:
        variance = reference.var(axis=0, ddof=1)
    variance = np.where(variance > 0, variance, np.finfo(float).tiny)
    return float(math.sqrt(np.mean((values - mean) ** 2 / variance)))


@dataclasses.dataclass(frozen=True)
class GammaDetection:
    distances: dict[tuple[int, int], float]
    alarmed: set[tuple[int, int]]
    keys: set[int]
    alarms: list[Alarm]


def gamma_detect(
        params: dict[tuple[int, int], GammaParams],
        config: MultiResConfig,
        keys: Optional[dict[tuple[int, int], set[int]]] = None,
        format_key: Callable[[int], str] = str,
        skip_sparse: bool = False,
) -> GammaDetection:
    """Distance of every sub-trace to the reference of its bucket.

    The reference of (n, m) is the mean and variance of the parameters of (n', m) for all n' ≠ n.
    A bucket with fewer than 2 sketch outputs has no reference; it raises unless `skip_sparse`
    is set, in which case it is left out with a warning.
    """
    statistics = ('alpha', 'beta') if config.statistic == 'both' else (config.statistic,)
    distances: dict[tuple[int, int], float] = {}
    alarmed = set()
    for m in range(config.M):
        present = [n for n in range(config.N) if (n, m) in params]
        if len(present) == 1:
            if not skip_sparse:
                raise DegenerateDataError(f'bucket {m}: fewer than 2 sketch outputs to build a reference')
            warn_once(logger, 'Skipping buckets with fewer than 2 sketch outputs')
            continue
        for n in present:
            others = [o for o in present if o != n]
            distance = max(
                mahalanobis_distance(
                    getattr(params[(n, m)], statistic),
                    np.array([getattr(params[(o, m)], statistic) for o in others]),
                )
                for statistic in statistics
            )
            distances[(n, m)] = distance
            if distance > config.lam:
                alarmed.add((n, m))

    identified: set[int] = set()
    if keys is not None and alarmed:
        per_hash = []
        for n in range(config.N):
            detected: set[int] = set()
            for (an, m) in alarmed:
                if an == n:
                    detected |= keys.get((n, m), set())
            per_hash.append(detected)
        identified = set.intersection(*per_hash)

    alarms = [
        Alarm(t_index=0, detector=f'gamma-{config.statistic}', score=distances[(n, m)], threshold=config.lam,
              keys=tuple(format_key(k) for k in sorted(identified & keys.get((n, m), set())))
              if keys is not None else ())
        for n, m in sorted(alarmed)
    ]
    logger.info(f'{len(alarmed)} of {len(distances)} sub-traces deviate; {len(identified)} keys identified')
    return GammaDetection(distances=distances, alarmed=alarmed, keys=identified, alarms=alarms)


def gamma_windows(records: Sequence[FlowRecord], key_of: Callable[[FlowRecord], int], config: MultiResConfig,
                  window: float, format_key: Callable[[int], str] = str) -> list[Alarm]:
    """Run the detector on consecutive windows of `window` seconds; alarms carry the window index."""
    if not records:
        raise ContractError('records non-empty')
    t0 = min(r.t for r in records)
    n_windows = math.floor((max(r.t for r in records) - t0) / window) + 1
    by_window: dict[int, list[FlowRecord]] = defaultdict(list)
    for record in records:
        by_window[math.floor((record.t - t0) / window)].append(record)
    alarms = []
    for w in range(n_windows):
        if not by_window[w]:
            continue
        aggregation = split_and_aggregate(by_window[w], key_of, config, t0=t0 + w * window, duration=window)
        detection = gamma_detect(fit_all(aggregation), config, aggregation.keys, format_key, skip_sparse=True)
        alarms.extend(dataclasses.replace(alarm, t_index=w) for alarm in detection.alarms)
    return alarms
