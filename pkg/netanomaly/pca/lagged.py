"""
Temporal PCA: principal components of lag-stacked rows (x(k), x(k−1), ..., x(k−J+1)), which
capture the temporal correlation that plain PCA ignores.
"""
import dataclasses

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.pca.subspace import fit_pca


@dataclasses.dataclass(frozen=True)
class LaggedApproximation:
    approximation: np.ndarray   # rows `start` .. m-1 of the input
    residual: np.ndarray
    start: int
    variances: np.ndarray


def lag_stack(x: np.ndarray, lags: int) -> np.ndarray:
    """Row r holds x(r + J − 1), x(r + J − 2), ..., x(r)."""
    m = x.shape[0]
    return np.hstack([x[lags - 1 - j:m - j] for j in range(lags)])


def lagged_pca(x: np.ndarray, lags: int, keep_axes: int, keep_modes: int) -> LaggedApproximation:
    """Approximate x with the leading `keep_axes · keep_modes` components of the lag-stacked matrix."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    m, n = x.shape
    if not 1 <= lags < m:
        raise ContractError(f'1 ≤ J < m (J={lags}, m={m})')
    if keep_axes < 1 or keep_modes < 1:
        raise ContractError('at least one axis and one lag mode must be kept')
    stacked = lag_stack(x, lags)
    means = stacked.mean(axis=0)
    model = fit_pca(stacked - means)
    kept = model.axes[:, :min(keep_axes * keep_modes, n * lags)]
    reconstructed = (stacked - means) @ kept @ kept.T + means
    approximation = reconstructed[:, :n]     # lag-0 block
    return LaggedApproximation(
        approximation=approximation,
        residual=x[lags - 1:] - approximation,
        start=lags - 1,
        variances=model.variances,
    )
