"""
Detectors on one residual stream τ.

`variance` tests every residual against T_h standard deviations. `cusum` accumulates the
Gaussian log-likelihood ratio of a known mean shift μ₀ → μ₁; `glr` estimates the shift as
the mean of the recent window instead. `multiscale` applies the variance test to every detail
level of a wavelet cascade and needs a quorum of levels, and `var_shift` compares the local
variance of the detrended stream to its global variance.
"""
import dataclasses
import logging
import math
from typing import Literal, Optional, TypeAlias

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.errors import ContractError
from netanomaly.wavelet.bands import level_details, local_variance
from netanomaly.wavelet.framelet import DEFAULT_BANK, get_bank

logger = logging.getLogger(__name__)


Method: TypeAlias = Literal['variance', 'cusum', 'glr', 'multiscale', 'var_shift']
METHODS: tuple[Method, ...] = ('variance', 'cusum', 'glr', 'multiscale', 'var_shift')


@dataclasses.dataclass(frozen=True)
class DetectorParams:
    threshold: float = 3.0              # T_h
    sigma: Optional[float] = None       # None: standard deviation of τ
    mu0: float = 0.0
    mu1: float = 1.0
    window: int = 10                    # N for glr, local window for var_shift
    scales: int = 4                     # L for multiscale
    quorum: Optional[int] = None        # None: ⌈L/2⌉
    bank: str = DEFAULT_BANK

    def __post_init__(self):
        if self.window < 2:
            raise ContractError('window ≥ 2')
        if self.scales < 1:
            raise ContractError('at least one scale')
        if self.sigma is not None and self.sigma <= 0:
            raise ContractError('σ > 0')


@dataclasses.dataclass(frozen=True)
class Detection:
    scores: np.ndarray              # one per residual, higher is more anomalous
    alarmed: np.ndarray             # bool per residual
    alarms: list[Alarm]
    change_times: dict[int, int]    # cusum: alarm index → t̂_c


def _sigma(tau: np.ndarray, params: DetectorParams) -> float:
    if params.sigma is not None:
        return params.sigma
    std = float(np.std(tau))
    return std if std > 0 else 1.0


def cusum_statistic(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For S_0 = 0 and S_k = s_0 + … + s_{k−1}: (S_k − min_{j≤k} S_j, argmin_{j≤k} S_j) for k = 0..len(s)."""
    S = np.concatenate(([0.0], np.cumsum(s)))
    running_min = np.minimum.accumulate(S)
    argmins = np.zeros(S.size, dtype=int)
    for k in range(1, S.size):
        argmins[k] = k if S[k] <= S[argmins[k - 1]] else argmins[k - 1]
    return S - running_min, argmins


def glr_statistic(tau: np.ndarray, window: int, sigma: float) -> np.ndarray:
    """max over the last `window` start points j of (Σ_{j..t} τ)² / (2σ²(t − j + 1)).

    That is the CUSUM statistic of the segment with the level set to its own mean μ̂.
    """
    g = np.zeros(tau.size)
    csum = np.concatenate(([0.0], np.cumsum(tau)))
    for t in range(tau.size):
        starts = np.arange(max(0, t - window + 1), t + 1)
        sums = csum[t + 1] - csum[starts]
        g[t] = float(np.max(sums * sums / (t + 1 - starts))) / (2.0 * sigma * sigma)
    return g


def detect(tau: np.ndarray, method: Method, params: DetectorParams = DetectorParams(),
           scale: Optional[np.ndarray] = None, detector: Optional[str] = None,
           keys: tuple[str, ...] = ()) -> Detection:
    """Run one detector over the residual stream.

    `scale` is the per-step standard deviation for the variance test (√P_{t|t}); without it
    the stream's own σ is used. CUSUM statistics after k residuals are reported at index k, so
    its alarms can land one step past the last residual; t̂_c is then the index of the last
    residual before the change (−1 if the change predates the stream).
    """
    tau = np.asarray(tau, dtype=float)
    detector = detector or f'kalman-{method}'
    change_times: dict[int, int] = {}
    threshold = params.threshold
    match method:
        case 'variance':
            sd = np.full(tau.size, _sigma(tau, params)) if scale is None else np.asarray(scale, dtype=float)
            with np.errstate(divide='ignore', invalid='ignore'):
                scores = np.where(sd > 0, np.abs(tau) / np.where(sd > 0, sd, 1.0),
                                  np.where(tau != 0, np.inf, 0.0))
            alarmed = scores > params.threshold
            indices = np.flatnonzero(alarmed)
        case 'cusum':
            sigma = _sigma(tau, params)
            s = (params.mu1 - params.mu0) / sigma ** 2 * (tau - (params.mu0 + params.mu1) / 2.0)
            statistic, argmins = cusum_statistic(s)
            scores = statistic[1:]
            alarmed = scores > params.threshold
            indices = np.flatnonzero(statistic > params.threshold)
            change_times = {int(k): int(argmins[k]) - 1 for k in indices}
        case 'glr':
            scores = glr_statistic(tau, params.window, _sigma(tau, params))
            alarmed = scores > params.threshold
            indices = np.flatnonzero(alarmed)
        case 'multiscale':
            _, details = level_details(tau, get_bank(params.bank), params.scales)
            quorum = params.quorum if params.quorum is not None else math.ceil(params.scales / 2)
            counts = np.zeros(tau.size)
            for detail in details:
                sd = float(np.std(detail))
                if sd > 0:
                    counts += np.abs(detail) > params.threshold * sd
            scores = counts
            alarmed = counts >= quorum
            indices = np.flatnonzero(alarmed)
            threshold = float(quorum)
        case 'var_shift':
            approximation, _ = level_details(tau, get_bank(params.bank), params.scales)
            detrended = tau - approximation
            global_variance = float(np.var(detrended))
            local = local_variance(detrended, params.window)
            scores = local / global_variance if global_variance > 0 else np.zeros(tau.size)
            alarmed = scores > params.threshold
            indices = np.flatnonzero(alarmed)
        case _:
            raise ContractError(f'unknown detection method {method!r} (choose from {", ".join(METHODS)})')

    statistic_at = (lambda k: float(statistic[k])) if method == 'cusum' else (lambda k: float(scores[k]))
    alarms = [
        Alarm(t_index=int(k), detector=detector, score=statistic_at(int(k)), threshold=threshold,
              keys=keys + ((f'change={change_times[int(k)]}',) if method == 'cusum' else ()))
        for k in indices
    ]
    logger.info(f'{detector}: {len(alarms)} alarms over {tau.size} residuals')
    return Detection(scores=scores, alarmed=alarmed, alarms=alarms, change_times=change_times)
