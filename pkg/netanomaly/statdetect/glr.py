"""
Abrupt change detection on management counters.

Every variable is fitted by an AR(p) model in a learning window and in the adjacent test
window; the generalized likelihood ratio of the residual variances signals a change. The
per-variable indicators form an anomaly vector φ(t), which an operator built from the history
of co-occurring changes turns into one anomaly measure.
"""
import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from netanomaly.core.alarm import Alarm
from netanomaly.core.numeric import sym_eigen
from netanomaly.errors import ContractError, DegenerateDataError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class GlrConfig:
    p: int = 2          # AR order
    N_L: int = 64       # learning window
    N_S: int = 16       # test window

    def __post_init__(self):
        if self.p < 0:
            raise ContractError('AR order p ≥ 0')
        if self.N_L <= self.p or self.N_S <= self.p:
            raise ContractError(f'window lengths must exceed the AR order (N_L={self.N_L}, N_S={self.N_S}, p={self.p})')


def ar_residuals(window: np.ndarray, p: int) -> np.ndarray:
    """Residuals of the least-squares AR(p) fit with intercept; N − p of them."""
    window = np.asarray(window, dtype=float)
    target = window[p:]
    design = np.column_stack([np.ones(target.size)] + [window[p - j:window.size - j] for j in range(1, p + 1)])
    coefficients, *_ = np.linalg.lstsq(design, target, rcond=None)
    return target - design @ coefficients


def ar_glr(series: np.ndarray, t_split: int, config: GlrConfig = GlrConfig()) -> float:
    """η ∈ [0, 1] comparing the learning window ending at t_split with the test window starting there."""
    series = np.asarray(series, dtype=float)
    if t_split < config.N_L or t_split + config.N_S > series.size:
        raise ContractError(f'windows [{t_split - config.N_L}, {t_split + config.N_S}) must lie within the series')
    learning = ar_residuals(series[t_split - config.N_L:t_split], config.p)
    test = ar_residuals(series[t_split:t_split + config.N_S], config.p)
    n_l, n_s = learning.size, test.size
    delta_l = float(learning @ learning) / n_l
    delta_s = float(test @ test) / n_s
    delta_p = (n_l * delta_l + n_s * delta_s) / (n_l + n_s)
    if delta_l <= 0 or delta_s <= 0:
        raise DegenerateDataError('degenerate window: zero residual variance')
    # η = a / (a + b) with a = δ_L^−N̂_L δ_S^−N̂_S and b = δ_P^−(N̂_L+N̂_S), in log space
    log_a = -n_l * math.log(delta_l) - n_s * math.log(delta_s)
    log_b = -(n_l + n_s) * math.log(delta_p)
    return float(expit(log_a - log_b))


def glr_series(series: np.ndarray, config: GlrConfig = GlrConfig()) -> np.ndarray:
    """η at every admissible split point; NaN where the windows do not fit."""
    series = np.asarray(series, dtype=float)
    eta = np.full(series.size, np.nan)
    for t in range(config.N_L, series.size - config.N_S + 1):
        eta[t] = ar_glr(series, t, config)
    return eta


@dataclasses.dataclass(frozen=True)
class AnomalyOperator:
    A_M: np.ndarray
    eigenvalues: np.ndarray         # descending
    eigenvectors: np.ndarray        # one per column
    anomalous: tuple[int, ...]      # indices of the eigenvalues of anomalous states

    @property
    def lambda_min(self) -> float:
        return float(min(self.eigenvalues[i] for i in self.anomalous))

    def designate(self, anomalous: Sequence[int]) -> 'AnomalyOperator':
        if not anomalous or any(not 0 <= i < self.eigenvalues.size for i in anomalous):
            raise ContractError(f'anomalous eigenvalue indices must lie in [0, {self.eigenvalues.size})')
        return dataclasses.replace(self, anomalous=tuple(anomalous))


def build_operator(anomaly_history: np.ndarray, anomalous: Optional[Sequence[int]] = None) -> AnomalyOperator:
    """A_M(i, j) = |⟨φ_i φ_j⟩| over time for i ≠ j, and 1 minus the row's off-diagonal sum on the diagonal."""
    history = np.atleast_2d(np.asarray(anomaly_history, dtype=float))
    T, M = history.shape
    if T < 1:
        raise ContractError('T ≥ 1')
    operator = np.abs(history.T @ history) / T
    np.fill_diagonal(operator, 0.0)
    np.fill_diagonal(operator, 1.0 - operator.sum(axis=1))
    eigenvalues, eigenvectors = sym_eigen(operator)
    result = AnomalyOperator(A_M=operator, eigenvalues=eigenvalues, eigenvectors=eigenvectors,
                             anomalous=tuple(range(M)))
    return result.designate(anomalous) if anomalous is not None else result


def combined_measure(phi: np.ndarray, op: AnomalyOperator) -> tuple[float, bool]:
    """E(λ) = Σ c_i² λ_i for φ = Σ c_i ψ_i; an anomaly iff E exceeds the smallest anomalous eigenvalue."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (op.A_M.shape[0],):
        raise ContractError(f'φ must have {op.A_M.shape[0]} components')
    c = op.eigenvectors.T @ phi
    energy = float(np.sum(c * c * op.eigenvalues))
    return energy, energy > op.lambda_min


def statglr_detect(variables: np.ndarray, config: GlrConfig = GlrConfig(), eta_threshold: float = 0.99,
                   anomalous: Optional[Sequence[int]] = None, names: Optional[Sequence[str]] = None) -> list[Alarm]:
    """GLR indicators of every column, combined per time step by the operator built from their history."""
    variables = np.atleast_2d(np.asarray(variables, dtype=float))
    if variables.shape[0] == 1:
        variables = variables.T
    etas = np.column_stack([glr_series(column, config) for column in variables.T])
    valid = ~np.isnan(etas).any(axis=1)
    if not valid.any():
        raise ContractError(f'series of {variables.shape[0]} samples are too short for windows N_L + N_S')
    phi = np.where(valid[:, None], etas, 0.0)
    op = build_operator((phi[valid] > eta_threshold).astype(float), anomalous)
    names = list(names) if names is not None else [f'var{i}' for i in range(variables.shape[1])]
    alarms = []
    for t in np.flatnonzero(valid):
        energy, alarm = combined_measure(phi[t], op)
        if alarm:
            keys = tuple(name for name, eta in zip(names, phi[t]) if eta > eta_threshold)
            alarms.append(Alarm(t_index=int(t), detector='statglr', score=energy, threshold=op.lambda_min, keys=keys))
    logger.info(f'GLR operator eigenvalues {np.round(op.eigenvalues, 4).tolist()}; {len(alarms)} alarms')
    return alarms
