"""
Forecasting models for change detection.

All models are linear recurrences, so they apply bucket-wise to whole sketches as well as
to scalar series: `forecast_path` works along the first axis of any array.
"""
import dataclasses
import logging
import math
from typing import Literal, Sequence, TypeAlias

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.sketch.kary import KarySketch

logger = logging.getLogger(__name__)


ModelKind: TypeAlias = Literal['MA', 'SMA', 'EWMA', 'NSHW', 'ARIMA0', 'ARIMA1']


@dataclasses.dataclass(frozen=True)
class ForecastModel:
    kind: ModelKind
    window: int = 1                 # W for MA and SMA
    alpha: float = 0.5
    beta: float = 0.5
    ar: tuple[float, ...] = ()      # AR_1 .. AR_p
    ma: tuple[float, ...] = ()      # MA_1 .. MA_q

    def __post_init__(self):
        if self.kind not in ('MA', 'SMA', 'EWMA', 'NSHW', 'ARIMA0', 'ARIMA1'):
            raise ContractError(f'unknown forecast model {self.kind!r}')
        if self.window < 1:
            raise ContractError('W ≥ 1')
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ContractError('0 ≤ α, β ≤ 1')
        if any(not -2.0 <= c <= 2.0 for c in self.ar + self.ma):
            raise ContractError('ARIMA coefficients must lie in [−2, 2]')

    @property
    def differencing(self) -> int:
        return 1 if self.kind == 'ARIMA1' else 0

    @property
    def warmup(self) -> int:
        """Observations needed before the first forecast."""
        match self.kind:
            case 'MA' | 'SMA':
                return self.window
            case 'EWMA' | 'NSHW':
                return 1
            case _:
                return max(len(self.ar) + self.differencing + len(self.ma), 1)


def sma_weights(window: int) -> np.ndarray:
    """Weights of lags 1..W: flat over the recent half, then decaying linearly to 1/⌈W/2⌉."""
    recent = math.ceil(window / 2)
    older = window - recent
    weights = np.ones(window)
    if older and recent > 1:
        weights[recent:] = 1.0 - np.arange(1, older + 1) * (1.0 - 1.0 / recent) / older
    return weights


def forecast_path(model: ForecastModel, series: np.ndarray) -> np.ndarray:
    """One-step-ahead forecasts: entry t is the forecast of series[t] from series[:t].

    The result has one more entry than `series` (the last is the forecast of the next value);
    entries before the warm-up are NaN.
    """
    series = np.asarray(series, dtype=float)
    T = series.shape[0]
    if T < model.warmup:
        raise ContractError(f'{model.kind} needs a history of at least {model.warmup} observations, got {T}')
    path = np.full((T + 1,) + series.shape[1:], np.nan)
    match model.kind:
        case 'MA':
            for t in range(model.window, T + 1):
                path[t] = series[t - model.window:t].mean(axis=0)
        case 'SMA':
            weights = sma_weights(model.window)
            for t in range(model.window, T + 1):
                lagged = series[t - model.window:t][::-1]     # lag 1 first
                path[t] = np.tensordot(weights, lagged, axes=1) / weights.sum()
        case 'EWMA':
            path[1] = series[0]
            for t in range(2, T + 1):
                path[t] = model.alpha * series[t - 1] + (1 - model.alpha) * path[t - 1]
        case 'NSHW':
            smooth = series[0]
            trend = series[1] - series[0] if T >= 2 else np.zeros_like(series[0])
            path[1] = smooth + trend
            for t in range(2, T + 1):
                new_smooth = model.alpha * series[t - 1] + (1 - model.alpha) * path[t - 1]
                trend = model.beta * (new_smooth - smooth) + (1 - model.beta) * trend
                smooth = new_smooth
                path[t] = smooth + trend
        case 'ARIMA0' | 'ARIMA1':
            _arima_path(model, series, path)
    return path


def _arima_path(model: ForecastModel, series: np.ndarray, path: np.ndarray):
    """Box-Jenkins recursion Z_t = Σ AR_j Z_{t−j} + e_t − Σ MA_i e_{t−i} on the differenced series."""
    d = model.differencing
    z = np.diff(series, n=d, axis=0) if d else series
    p, q = len(model.ar), len(model.ma)
    errors = np.zeros_like(z)
    for u in range(p, z.shape[0] + 1):
        predicted = np.zeros_like(series[0])
        for j, coefficient in enumerate(model.ar, start=1):
            predicted = predicted + coefficient * z[u - j]
        for i, coefficient in enumerate(model.ma, start=1):
            if u - i >= 0:
                predicted = predicted - coefficient * errors[u - i]
        if u < z.shape[0]:
            errors[u] = z[u] - predicted
        # z[u] is series[u] (d = 0) or series[u + 1] − series[u] (d = 1)
        t = u + d
        path[t] = predicted + (series[t - 1] if d else 0.0)


def forecast_series(model: ForecastModel, series: Sequence[float] | np.ndarray) -> float:
    """Forecast of the value following `series`."""
    return float(forecast_path(model, np.asarray(series, dtype=float))[-1])


def forecast(model: ForecastModel, history: Sequence[KarySketch]) -> KarySketch:
    """Forecast sketch S_f for the interval after `history` (bucket-wise recurrence)."""
    if not history:
        raise ContractError(f'{model.kind} needs a history of at least {model.warmup} sketches')
    first = history[0]
    for sketch in history[1:]:
        if not first.compatible(sketch):
            raise ContractError('all sketches in the history must share H, K and hash seeds')
    stacked = np.stack([s.table for s in history])
    return first.with_table(forecast_path(model, stacked)[-1])
