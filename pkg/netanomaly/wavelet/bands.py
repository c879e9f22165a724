"""
Low, mid and high frequency parts of a traffic signal and the local-variability (V) detector.

With 5 minute bins over about two months the decomposition runs 12 levels deep: the H part is
resynthesized from levels 1-5, the M part from levels 6-8 and the L part from everything
coarser. Shorter signals keep the proportions 5:3:4 of their own depth.
"""
import dataclasses
import logging
import math
from typing import Callable, Optional

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.errors import ContractError
from netanomaly.utils.logs import warn_once
from netanomaly.wavelet.framelet import BandDecomposition, FilterBank, analyze, max_levels, synthesize

logger = logging.getLogger(__name__)


MAX_DEPTH = 12
H_FRACTION = 5 / 12
M_FRACTION = 3 / 12
ZERO_VARIANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class Bands:
    low: np.ndarray
    mid: np.ndarray
    high: np.ndarray
    depth: int
    h_levels: int
    m_levels: int


def band_levels(depth: int) -> tuple[int, int]:
    """(levels in H, levels in M) for a decomposition `depth` levels deep."""
    h = min(math.ceil(depth * H_FRACTION), depth)
    m = min(math.ceil(depth * M_FRACTION), depth - h)
    return h, m


def _resynthesize(decomposition: BandDecomposition, bank: FilterBank,
                  keep: Callable[[int, np.ndarray], bool], lowpass: bool) -> np.ndarray:
    selected = decomposition.map_highpass(keep)
    if not lowpass:
        selected = dataclasses.replace(selected, lowpass=np.zeros_like(selected.lowpass))
    return synthesize(selected, bank)


def band_split(x: np.ndarray, bank: FilterBank, threshold: float = 0.0,
               depth: Optional[int] = None) -> Bands:
    """Split x into its L, M and H parts.

    H coefficients with magnitude below `threshold` are dropped; with threshold 0 the three
    parts add up to x. Every part has the length of x.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ContractError('band_split needs a one-dimensional signal of at least 2 samples')
    if depth is None:
        depth = max_levels(x.size, MAX_DEPTH)
    h_levels, m_levels = band_levels(depth)
    decomposition = analyze(x, bank, depth)

    thresholded = decomposition if threshold <= 0 else dataclasses.replace(decomposition, highpass=[
        [np.where(np.abs(c) >= threshold, c, 0.0) for c in level] for level in decomposition.highpass
    ])
    high = _resynthesize(thresholded, bank, lambda j, c: j <= h_levels, lowpass=False)
    mid = _resynthesize(decomposition, bank,
                        lambda j, c: h_levels < j <= h_levels + m_levels, lowpass=False)
    low = _resynthesize(decomposition, bank,
                        lambda j, c: j > h_levels + m_levels, lowpass=True)
    logger.debug(f'Band split of {x.size} samples: depth {depth}, H levels 1-{h_levels}, '
                 f'M levels {h_levels + 1}-{h_levels + m_levels}')
    return Bands(low=low, mid=mid, high=high, depth=depth, h_levels=h_levels, m_levels=m_levels)


def local_variance(x: np.ndarray, window: int) -> np.ndarray:
    """Variance over the trailing `window` samples (fewer at the start; 0 for the first sample)."""
    x = np.asarray(x, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    csum2 = np.concatenate(([0.0], np.cumsum(x * x)))
    end = np.arange(1, x.size + 1)
    start = np.maximum(end - window, 0)
    count = end - start
    mean = (csum[end] - csum[start]) / count
    variance = (csum2[end] - csum2[start]) / count - mean * mean
    return np.clip(variance, 0.0, None)


def _unit_variance(part: np.ndarray, name: str) -> np.ndarray:
    std = float(np.std(part))
    if std <= ZERO_VARIANCE:
        warn_once(logger, f'The {name} part has no variance; skipping its normalization')
        return part
    return part / std


@dataclasses.dataclass(frozen=True)
class VPeak:
    start: int
    width: int        # contiguous samples above the threshold
    t_peak: int
    height: float


@dataclasses.dataclass(frozen=True)
class VariabilityResult:
    v: np.ndarray
    peaks: list[VPeak]
    alarms: list[Alarm]


def local_variability_detect(
        mid: np.ndarray,
        high: np.ndarray,
        window: int,
        weights: tuple[float, float] = (0.5, 0.5),
        threshold: float = 2.0,
) -> VariabilityResult:
    """V(t) = w_H·localvar(H) + w_M·localvar(M) on unit-variance parts; every run above the threshold is one peak.

    `weights` is (w_H, w_M). The window should be about as long as the anomalies sought.
    """
    if window < 2:
        raise ContractError('window ≥ 2')
    mid = np.asarray(mid, dtype=float)
    high = np.asarray(high, dtype=float)
    if mid.shape != high.shape:
        raise ContractError('M and H parts must have the same length')
    w_high, w_mid = weights
    v = (w_high * local_variance(_unit_variance(high, 'H'), window)
         + w_mid * local_variance(_unit_variance(mid, 'M'), window))

    peaks = []
    above = v > threshold
    t = 0
    while t < v.size:
        if not above[t]:
            t += 1
            continue
        start = t
        while t < v.size and above[t]:
            t += 1
        t_peak = start + int(np.argmax(v[start:t]))
        peaks.append(VPeak(start=start, width=t - start, t_peak=t_peak, height=float(v[t_peak])))
    alarms = [Alarm(t_index=p.t_peak, detector='wavelet', score=p.height, threshold=threshold) for p in peaks]
    logger.info(f'V-signal: {len(peaks)} peaks above {threshold:g}')
    return VariabilityResult(v=v, peaks=peaks, alarms=alarms)


def level_details(x: np.ndarray, bank: FilterBank, levels: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Cascade decomposition x = a^L + Σ_i d^i with every part at the original length."""
    x = np.asarray(x, dtype=float)
    decomposition = analyze(x, bank, levels)
    details = [
        _resynthesize(decomposition, bank, lambda j, c, i=i: j == i, lowpass=False)
        for i in range(1, levels + 1)
    ]
    approximation = _resynthesize(decomposition, bank, lambda j, c: False, lowpass=True)
    return approximation, details
