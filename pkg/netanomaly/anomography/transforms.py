"""
Transforms extracting the anomalous part Ỹ of link traffic Y (time bins × links).

Spatial transforms act on every time bin across links; temporal transforms filter every
link series along time.
"""
import dataclasses
import logging
from typing import Literal, Optional, TypeAlias

import numpy as np

from netanomaly.errors import ConfigError, ContractError
from netanomaly.pca.subspace import fit_pca
from netanomaly.sketch.forecast import ForecastModel, forecast_path
from netanomaly.wavelet.bands import MAX_DEPTH, level_details
from netanomaly.wavelet.framelet import DEFAULT_BANK, get_bank, max_levels

logger = logging.getLogger(__name__)


TransformKind: TypeAlias = Literal['spatial_pca', 'temporal_pca', 'fourier', 'wavelet', 'arima']
TRANSFORM_KINDS: tuple[TransformKind, ...] = ('spatial_pca', 'temporal_pca', 'fourier', 'wavelet', 'arima')


@dataclasses.dataclass(frozen=True)
class Transform:
    kind: TransformKind
    k: int = 1                      # normal subspace dimension for the PCA kinds
    cutoff: int = 1                 # c for fourier and wavelet
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    d: int = 0                      # ARIMA differencing, 0 or 1
    bank: str = DEFAULT_BANK

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ConfigError(f'unknown transform {self.kind!r} (choose from {", ".join(TRANSFORM_KINDS)})')
        if self.k < 1:
            raise ConfigError('k ≥ 1')
        if self.cutoff < 0:
            raise ConfigError('cutoff c ≥ 0')
        if self.d not in (0, 1):
            raise ConfigError('ARIMA differencing d must be 0 or 1')

    def forecast_model(self) -> ForecastModel:
        return ForecastModel(kind='ARIMA1' if self.d else 'ARIMA0', ar=self.ar, ma=self.ma)


def spatial_operator(Y: np.ndarray, k: int) -> np.ndarray:
    """T = I − P with P the projection onto the k leading spatial axes of the centered link loads."""
    centered = Y - Y.mean(axis=0)
    model = fit_pca(centered).with_k(k)
    return np.eye(Y.shape[1]) - model.projector()


def temporal_operator(Y: np.ndarray, k: int) -> np.ndarray:
    """I − P with P the projection onto the k leading temporal axes (time bins × time bins)."""
    model = fit_pca(Y.T).with_k(k)
    return np.eye(Y.shape[0]) - model.projector()


def dft_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n)


def fourier_highpass(Y: np.ndarray, cutoff: Optional[int]) -> np.ndarray:
    """Zero the frequencies k ≤ c and k ≥ n − c of every column, then invert; no zeroing for `cutoff` None."""
    n = Y.shape[0]
    W = dft_matrix(n)
    spectrum = W @ Y
    if cutoff is not None:
        if cutoff >= n / 2:
            raise ConfigError(f'fourier cutoff c must be below n/2 = {n / 2:g}, got {cutoff}')
        frequencies = np.arange(n)
        spectrum[(frequencies <= cutoff) | (frequencies >= n - cutoff)] = 0.0
    # W⁻¹ = conj(W) / n
    return np.real(np.conj(W) @ spectrum) / n


def wavelet_highpass(Y: np.ndarray, cutoff: int, bank_name: str = DEFAULT_BANK) -> np.ndarray:
    """Keep the detail levels 1..c of every column; coarser levels and the approximation are zeroed."""
    bank = get_bank(bank_name)
    levels = max_levels(Y.shape[0], MAX_DEPTH)
    if not 1 <= cutoff <= levels:
        raise ConfigError(f'wavelet cutoff c must lie in [1, {levels}] for {Y.shape[0]} time bins, got {cutoff}')
    result = np.zeros_like(Y)
    for j in range(Y.shape[1]):
        _, details = level_details(Y[:, j], bank, levels)
        result[:, j] = np.sum(details[:cutoff], axis=0)
    return result


def forecast_errors(Y: np.ndarray, model: ForecastModel) -> np.ndarray:
    """Y minus its one-step-ahead forecasts; zero before the model's warm-up."""
    predicted = forecast_path(model, Y)[:-1]
    return np.where(np.isnan(predicted), 0.0, Y - np.nan_to_num(predicted))


def apply_transform(Y: np.ndarray, transform: Transform) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 2 or Y.shape[1] < 1:
        raise ContractError(f'Y needs ≥ 2 time bins and ≥ 1 link, got shape {Y.shape}')
    match transform.kind:
        case 'spatial_pca':
            if transform.k > Y.shape[1]:
                raise ConfigError(f'k ≤ number of links ({Y.shape[1]})')
            result = (Y - Y.mean(axis=0)) @ spatial_operator(Y, transform.k)
        case 'temporal_pca':
            if transform.k > Y.shape[0]:
                raise ConfigError(f'k ≤ number of time bins ({Y.shape[0]})')
            result = temporal_operator(Y, transform.k) @ Y
        case 'fourier':
            result = fourier_highpass(Y, transform.cutoff)
        case 'wavelet':
            result = wavelet_highpass(Y, transform.cutoff, transform.bank)
        case 'arima':
            result = forecast_errors(Y, transform.forecast_model())
        case _:
            raise ConfigError(f'unknown transform {transform.kind!r}')
    logger.debug(f'{transform.kind} transform: anomalous share of energy '
                 f'{float(np.sum(result ** 2)) / max(float(np.sum(Y ** 2)), 1e-300):.4f}')
    return result
