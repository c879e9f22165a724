"""
KL-distance change detection on histogram clones and identification of the feature values
behind an alarm.

Each clone compares the distribution of an interval with the one of the previous interval.
The first difference Δ_t of that distance series is tested against 3σ̂, with σ̂ a robust
estimate from the training intervals.
"""
import dataclasses
import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from netanomaly.errors import ContractError, DegenerateDataError
from netanomaly.extraction.histograms import clone_hash, distribution, kl_distance

logger = logging.getLogger(__name__)


MAD_TO_SIGMA = 1.4826
DEFAULT_SMOOTHING = 0.5     # pseudo-packets per bin


@dataclasses.dataclass(frozen=True)
class KlDetection:
    kl: np.ndarray          # k × T, NaN at t = 0
    delta: np.ndarray       # k × T, NaN for t < 2
    sigma: np.ndarray       # σ̂ per clone
    alarms: np.ndarray      # k × T bool, only after training
    sigma_mult: float

    @property
    def interval_alarms(self) -> np.ndarray:
        """Intervals where every clone alarms."""
        return np.flatnonzero(self.alarms.all(axis=0))

    def score(self, t: int) -> float:
        """min over clones of Δ_t / σ̂."""
        return float(np.min(self.delta[:, t] / self.sigma))


def kl_series(counts: np.ndarray, smoothing: float = DEFAULT_SMOOTHING) -> np.ndarray:
    """KL distance of every interval from its predecessor for one clone (intervals × m)."""
    kl = np.full(counts.shape[0], np.nan)
    for t in range(1, counts.shape[0]):
        kl[t] = kl_distance(distribution(counts[t], smoothing), distribution(counts[t - 1], smoothing))
    return kl


def robust_sigma(values: np.ndarray) -> float:
    values = values[~np.isnan(values)]
    return MAD_TO_SIGMA * float(np.median(np.abs(values - np.median(values))))


def kl_detect(clone_counts: np.ndarray, training_intervals: int, sigma_mult: float = 3.0,
              smoothing: float = DEFAULT_SMOOTHING) -> KlDetection:
    """Detect on the k × T × m packet counts of k clones over T intervals.

    Δ of the intervals before `training_intervals` estimates σ̂; the later ones alarm when Δ ≥ 3σ̂.
    """
    clone_counts = np.asarray(clone_counts, dtype=float)
    if clone_counts.ndim != 3:
        raise ContractError('clone counts must be k × intervals × m')
    k, T, _ = clone_counts.shape
    if training_intervals < 3 or T < training_intervals + 2:
        raise ContractError(f'need ≥ 3 training intervals and ≥ training + 2 intervals '
                            f'(training={training_intervals}, intervals={T})')
    kl = np.stack([kl_series(clone_counts[c], smoothing) for c in range(k)])
    delta = np.full((k, T), np.nan)
    delta[:, 2:] = np.diff(kl[:, 1:], axis=1)
    sigma = np.array([robust_sigma(delta[c, :training_intervals]) for c in range(k)])
    if np.any(sigma <= 0):
        raise DegenerateDataError('σ̂ = 0 over the training intervals; use more training data')
    alarms = np.zeros((k, T), dtype=bool)
    alarms[:, training_intervals:] = delta[:, training_intervals:] >= sigma_mult * sigma[:, None]
    logger.debug(f'KL detection: σ̂ = {np.round(sigma, 6).tolist()}, '
                 f'{int(alarms.all(axis=0).sum())} intervals alarmed by all {k} clones')
    return KlDetection(kl=kl, delta=delta, sigma=sigma, alarms=alarms, sigma_mult=sigma_mult)


def offending_bins(current: np.ndarray, reference: np.ndarray, sigma: float, previous_kl: float,
                   sigma_mult: float = 3.0, smoothing: float = DEFAULT_SMOOTHING) -> list[int]:
    """Bins that must be equalized (q_i = p_i, largest |p_i − q_i| first) before Δ drops below 3σ̂.

    The bins not yet equalized keep their relative reference weights and share the remaining mass.
    """
    p = distribution(current, smoothing)
    reference_q = distribution(reference, smoothing)
    q = reference_q
    collected: list[int] = []
    while kl_distance(p, q) - previous_kl >= sigma_mult * sigma:
        if len(collected) >= p.size:
            raise DegenerateDataError('value identification did not converge within m iterations')
        gap = np.abs(p - q)
        gap[collected] = -1.0
        collected.append(int(np.argmax(gap)))
        rest = np.ones(p.size, dtype=bool)
        rest[collected] = False
        q = p.copy()
        if rest.any() and reference_q[rest].sum() > 0:
            q[rest] = reference_q[rest] * (1.0 - p[collected].sum()) / reference_q[rest].sum()
    return collected


def identify_values(
        current: np.ndarray,
        reference: np.ndarray,
        sigma: np.ndarray,
        seeds: Sequence[int],
        values: Iterable[int],
        previous_kl: np.ndarray,
        sigma_mult: float = 3.0,
        smoothing: float = DEFAULT_SMOOTHING,
) -> set[int]:
    """Feature values whose bin was collected in every clone.

    `current` and `reference` are the k × m counts of the alarmed interval and its predecessor,
    `previous_kl` the distance of the predecessor from its own predecessor per clone.
    """
    current = np.atleast_2d(current)
    reference = np.atleast_2d(reference)
    m = current.shape[1]
    collected = [
        set(offending_bins(current[c], reference[c], float(sigma[c]), float(previous_kl[c]), sigma_mult, smoothing))
        for c in range(len(seeds))
    ]
    hashes = [clone_hash(m, s) for s in seeds]
    identified = {v for v in set(values) if all(h(v) in bins for h, bins in zip(hashes, collected))}
    logger.debug(f'Identified {len(identified)} values from {[len(b) for b in collected]} bins per clone')
    return identified


def previous_distance(detection: KlDetection, t: int) -> np.ndarray:
    """D_{t−1} per clone, 0 where undefined."""
    return np.nan_to_num(detection.kl[:, t - 1]) if t >= 1 else np.zeros(detection.kl.shape[0])


def interval_values(detection: KlDetection, clone_counts: np.ndarray, t: int, seeds: Sequence[int],
                    values: Iterable[int], smoothing: Optional[float] = None) -> set[int]:
    """identify_values for interval t of a detection run."""
    if t < 1:
        raise ContractError('the first interval has no reference distribution')
    return identify_values(clone_counts[:, t], clone_counts[:, t - 1], detection.sigma, seeds, values,
                           previous_distance(detection, t), detection.sigma_mult,
                           DEFAULT_SMOOTHING if smoothing is None else smoothing)
