"""
The subspace method: principal axes of the (normalized) traffic matrix are split into a
normal subspace, spanned by the first `k` axes, and a residual subspace.
Measurements with an unusually large residual (squared prediction error, SPE) are anomalous;
the threshold follows from the Q-statistic of the residual variances.

Note: the axes maximize the captured variance and the variances are the eigenvalues of
the covariance matrix C = XᵀX/m.
"""
import dataclasses
import logging
import math
from typing import Optional, Sequence, Hashable

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.core.numeric import normal_quantile, sym_eigen
from netanomaly.core.traffic import TrafficMatrix
from netanomaly.errors import ContractError, DegenerateDataError
from netanomaly.utils.logs import warn_once

logger = logging.getLogger(__name__)


UNDETECTABLE_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class PcaModel:
    axes: np.ndarray          # n × n, one axis per column
    variances: np.ndarray     # nonincreasing
    col_means: np.ndarray
    col_scales: np.ndarray
    k: Optional[int] = None   # normal subspace dimension, set by `with_k`

    @property
    def n(self) -> int:
        return self.axes.shape[0]

    def with_k(self, k: int) -> 'PcaModel':
        if not 1 <= k <= self.n:
            raise ContractError(f'1 ≤ k ≤ n (k={k}, n={self.n})')
        return dataclasses.replace(self, k=k)

    def _require_k(self) -> int:
        if self.k is None:
            raise ContractError('the normal subspace dimension k has not been chosen')
        return self.k

    def projector(self) -> np.ndarray:
        """P = V_k V_kᵀ, the projection onto the normal subspace."""
        normal = self.axes[:, :self._require_k()]
        return normal @ normal.T

    def residual(self, x: np.ndarray) -> np.ndarray:
        """(I − P)x"""
        normal = self.axes[:, :self._require_k()]
        return x - normal @ (normal.T @ x)

    def residual_variances(self) -> np.ndarray:
        return self.variances[self._require_k():]

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.col_means) / self.col_scales

    def variance_fraction(self, k: int) -> float:
        total = float(self.variances.sum())
        return float(self.variances[:k].sum()) / total if total > 0 else 1.0


@dataclasses.dataclass(frozen=True)
class AnomalyDirection:
    theta: np.ndarray
    label: Hashable

    def __post_init__(self):
        if abs(float(np.linalg.norm(self.theta)) - 1.0) > 1e-9:
            raise ContractError(f'anomaly direction {self.label!r} must have unit norm')


def normalize_columns(
        matrix: TrafficMatrix | np.ndarray, unit_variance: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center every column (and optionally scale it to unit population variance).

    Returns the normalized matrix with the column means and scales; constant columns keep scale 1.
    """
    values = matrix.values if isinstance(matrix, TrafficMatrix) else np.asarray(matrix, dtype=float)
    if values.shape[0] < 2:
        raise ContractError('normalization needs m ≥ 2 time bins')
    means = values.mean(axis=0)
    centered = values - means
    scales = np.ones(values.shape[1])
    if unit_variance:
        std = centered.std(axis=0)
        nonconstant = std > 0
        scales[nonconstant] = std[nonconstant]
    return centered / scales, means, scales


def fit_pca(x: np.ndarray, col_means: Optional[np.ndarray] = None,
            col_scales: Optional[np.ndarray] = None) -> PcaModel:
    m, n = x.shape
    covariance = x.T @ x / m
    variances, axes = sym_eigen(covariance)
    return PcaModel(
        axes=axes,
        variances=np.clip(variances, 0.0, None),
        col_means=np.zeros(n) if col_means is None else col_means,
        col_scales=np.ones(n) if col_scales is None else col_scales,
    )


def split_subspace(x: np.ndarray, model: PcaModel, sigma_mult: float = 3.0,
                   require_residual: bool = False) -> int:
    """Number of leading axes before the first projection with a `sigma_mult`-σ excursion.

    The result is at least 1; with `require_residual` it is at most n − 1 as well.
    """
    n = model.n
    k = n
    for i in range(n):
        projection = x @ model.axes[:, i]
        deviation = np.abs(projection - projection.mean())
        std = projection.std()
        if std > 0 and np.any(deviation > sigma_mult * std):
            k = i
            break
    upper = n - 1 if require_residual and n > 1 else n
    clamped = min(max(k, 1), upper)
    if clamped != k:
        warn_once(logger, f'Degenerate subspace split k={k}; clamped to {clamped}')
    return clamped


def q_threshold(residual_variances: Sequence[float] | np.ndarray, alpha: float) -> float:
    """Q-statistic threshold on the SPE at false-alarm rate `alpha`."""
    if not 0.0 < alpha < 1.0:
        raise ContractError(f'0 < alpha < 1, got {alpha}')
    lam = np.asarray(residual_variances, dtype=float)
    lam = lam[lam > 0]
    if lam.size == 0:
        raise DegenerateDataError('empty residual subspace')
    phi1, phi2, phi3 = (float(np.sum(lam ** i)) for i in (1, 2, 3))
    h0 = 1.0 - 2.0 * phi1 * phi3 / (3.0 * phi2 ** 2)
    c_alpha = normal_quantile(1.0 - alpha)
    base = c_alpha * math.sqrt(2.0 * phi2 * h0 ** 2) / phi1 + 1.0 + phi2 * h0 * (h0 - 1.0) / phi1 ** 2
    if h0 <= 0 or base <= 0:
        raise DegenerateDataError(f'Q-statistic undefined for these residual variances (h0={h0:.4g})')
    return phi1 * base ** (1.0 / h0)


@dataclasses.dataclass(frozen=True)
class SpeResult:
    spe: float
    threshold: float
    alarm: bool


def spe_detect(x: np.ndarray, model: PcaModel, alpha: float) -> SpeResult:
    residual = model.residual(x)
    spe = float(residual @ residual)
    threshold = q_threshold(model.residual_variances(), alpha)
    return SpeResult(spe=spe, threshold=threshold, alarm=spe > threshold)


@dataclasses.dataclass(frozen=True)
class Identification:
    index: int
    magnitude: float
    anomalous: np.ndarray     # the estimated anomalous part of x


def identify_quantify(x: np.ndarray, model: PcaModel,
                      directions: Sequence[AnomalyDirection]) -> Identification:
    """Pick the direction whose removal brings x closest to the normal subspace."""
    x_residual = model.residual(x)
    best: Optional[tuple[float, int, float]] = None
    undetectable = []
    for i, direction in enumerate(directions):
        theta_residual = model.residual(direction.theta)
        norm2 = float(theta_residual @ theta_residual)
        if math.sqrt(norm2) <= UNDETECTABLE_TOLERANCE:
            undetectable.append(direction.label)
            continue
        magnitude = float(theta_residual @ x_residual) / norm2
        remaining = x_residual - magnitude * theta_residual
        distance = float(remaining @ remaining)
        if best is None or distance < best[0]:
            best = (distance, i, magnitude)
    if best is None:
        raise DegenerateDataError(f'no detectable anomaly direction among {undetectable}')
    _, index, magnitude = best
    return Identification(index=index, magnitude=magnitude, anomalous=magnitude * directions[index].theta)


def greedy_identify(x: np.ndarray, model: PcaModel, directions: Sequence[AnomalyDirection],
                    alpha: float) -> list[int]:
    """Remove the best explaining direction until the residual is no longer anomalous.

    Returns the indices of the removed directions in the order they were chosen.
    """
    threshold = q_threshold(model.residual_variances(), alpha)
    remaining = list(range(len(directions)))
    chosen: list[int] = []
    x = x.copy()
    while remaining:
        residual = model.residual(x)
        if float(residual @ residual) <= threshold:
            break
        try:
            identified = identify_quantify(x, model, [directions[i] for i in remaining])
        except DegenerateDataError:
            break
        index = remaining.pop(identified.index)
        chosen.append(index)
        x = x - identified.anomalous
    return chosen


def detectability_bound(theta: np.ndarray, model: PcaModel, alpha: float) -> Optional[float]:
    """Smallest anomaly magnitude along `theta` that is guaranteed to be detected (None: undetectable)."""
    residual_norm = float(np.linalg.norm(model.residual(theta)))
    if residual_norm <= UNDETECTABLE_TOLERANCE:
        return None
    return 2.0 * math.sqrt(q_threshold(model.residual_variances(), alpha)) / residual_norm


def default_directions(series_ids: Sequence[Hashable], routing: Optional[np.ndarray] = None) -> list[AnomalyDirection]:
    """One candidate per flow: unit vectors, or normalized routing-matrix columns if routing is known."""
    if routing is None:
        identity = np.eye(len(series_ids))
        return [AnomalyDirection(theta=identity[i], label=label) for i, label in enumerate(series_ids)]
    directions = []
    for j in range(routing.shape[1]):
        column = routing[:, j]
        norm = np.linalg.norm(column)
        if norm > 0:
            directions.append(AnomalyDirection(theta=column / norm, label=f'flow{j}'))
    return directions


def subspace_detect(
        matrix: TrafficMatrix,
        alpha: float = 0.05,
        sigma_mult: float = 3.0,
        unit_variance: bool = False,
        k: Optional[int] = None,
        routing: Optional[np.ndarray] = None,
        detector: str = 'pca',
) -> list[Alarm]:
    """Fit the subspace model on the whole matrix and test every time bin.

    Alarms name the series (or routed flow) that best explains the residual.
    """
    x, means, scales = normalize_columns(matrix, unit_variance)
    model = fit_pca(x, means, scales)
    model = model.with_k(k if k is not None else split_subspace(x, model, sigma_mult, require_residual=True))
    logger.info(f'Normal subspace: k={model.k} axes capture {model.variance_fraction(model.k):.1%} of the variance')
    directions = default_directions(matrix.series_ids, routing)
    alarms = []
    for i, row in enumerate(x):
        result = spe_detect(row, model, alpha)
        if not result.alarm:
            continue
        keys: tuple[str, ...] = ()
        try:
            identified = identify_quantify(row, model, directions)
            keys = (str(directions[identified.index].label),)
        except DegenerateDataError as e:
            warn_once(logger, str(e))
        alarms.append(Alarm(t_index=i, detector=detector, score=result.spe, threshold=result.threshold, keys=keys))
    return alarms
