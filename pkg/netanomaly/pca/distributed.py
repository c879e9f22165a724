"""
Distributed subspace detection with local filtering.

Each monitor observes one series and only sends an update to the coordinator when the
observation drifts more than `delta` from the value the coordinator currently assumes
(the last value sent). The coordinator keeps a sliding window of the perturbed matrix,
refits the model every round and tests the newest row.

The perturbation of every entry of column i is bounded by delta_i, which bounds the
error of the eigen-decomposition; `delta_from_epsilon` inverts that bound for a tolerable
eigen-error epsilon when all monitors share one filter width.
"""
import collections
import dataclasses
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from netanomaly.errors import ContractError, DegenerateDataError
from netanomaly.pca.subspace import fit_pca, normalize_columns, q_threshold, split_subspace
from netanomaly.utils.logs import timelogger, warn_once

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class UpdateMessage:
    monitor: int
    value: float        # x_i(t)
    prediction: float   # y_i(t), equal to the value under last-value prediction


@dataclasses.dataclass
class MonitorState:
    index: int
    delta: float
    last_sent: Optional[float] = None
    error: float = 0.0

    def __post_init__(self):
        if self.delta < 0:
            raise ContractError(f'delta ≥ 0 (monitor {self.index})')


def monitor_step(state: MonitorState, value: float) -> Optional[UpdateMessage]:
    # a zero-width filter reports every sample, repeats included
    if state.last_sent is not None and state.delta > 0 and abs(value - state.last_sent) <= state.delta:
        state.error = value - state.last_sent
        return None
    state.last_sent = value
    state.error = 0.0
    return UpdateMessage(monitor=state.index, value=value, prediction=value)


class MessageBus:
    """In-process stand-in for the monitor → coordinator channel."""
    def __init__(self):
        self._queue: collections.deque[UpdateMessage] = collections.deque()
        self.sent = 0

    def send(self, message: UpdateMessage):
        self._queue.append(message)
        self.sent += 1

    def drain(self) -> list[UpdateMessage]:
        messages = list(self._queue)
        self._queue.clear()
        return messages


@dataclasses.dataclass
class CoordinatorState:
    n: int
    window_size: int
    alpha: float = 0.05
    k: Optional[int] = None             # None: choose per round with the 3σ rule
    sigma_mult: float = 3.0
    window: collections.deque = dataclasses.field(init=False)
    predictions: np.ndarray = dataclasses.field(init=False)

    def __post_init__(self):
        if self.window_size < 2:
            raise ContractError('the coordinator window needs at least 2 rows')
        self.window = collections.deque(maxlen=self.window_size)
        self.predictions = np.zeros(self.n)


@dataclasses.dataclass(frozen=True)
class CoordinatorDecision:
    alarm: bool
    spe: float
    threshold: float


def window_decision(window: np.ndarray, alpha: float, k: Optional[int], sigma_mult: float) -> CoordinatorDecision:
    """Fit on the window and test its newest row; shared by the coordinator and the exact scheme."""
    x, means, scales = normalize_columns(window)
    model = fit_pca(x, means, scales)
    if model.n < 2:
        return CoordinatorDecision(alarm=False, spe=0.0, threshold=math.inf)
    chosen = min(k, model.n - 1) if k is not None else split_subspace(x, model, sigma_mult, require_residual=True)
    model = model.with_k(chosen)
    residual = model.residual(x[-1])
    spe = float(residual @ residual)
    try:
        threshold = q_threshold(model.residual_variances(), alpha)
    except DegenerateDataError as e:
        warn_once(logger, f'No detection this round: {e}')
        return CoordinatorDecision(alarm=False, spe=spe, threshold=math.inf)
    return CoordinatorDecision(alarm=spe > threshold, spe=spe, threshold=threshold)


def coordinator_step(state: CoordinatorState, updates: Iterable[UpdateMessage]) -> CoordinatorDecision:
    for message in updates:
        state.predictions[message.monitor] = message.prediction
    state.window.append(state.predictions.copy())
    if len(state.window) < 2:
        return CoordinatorDecision(alarm=False, spe=0.0, threshold=math.inf)
    return window_decision(np.array(state.window), state.alpha, state.k, state.sigma_mult)


def delta_from_epsilon(eigenvalue_mean: float, m: int, n: int, epsilon: float) -> tuple[float, float]:
    """Homogeneous filter width for a tolerable eigen-error.

    Filtering errors are taken as uniform on [−δ, δ], so σ² = δ²/3.
    """
    if eigenvalue_mean <= 0 or epsilon <= 0:
        raise ContractError('eigenvalue mean and epsilon must be positive')
    base = 3.0 * eigenvalue_mean * n
    sigma = (math.sqrt(base + 3.0 * epsilon * math.sqrt(m * m + m * n)) - math.sqrt(base)) / math.sqrt(m + n)
    return sigma, sigma * math.sqrt(3.0)


@dataclasses.dataclass(frozen=True)
class StepReport:
    step: int
    alarms: bool
    messages: int
    exact_alarm: bool


@dataclasses.dataclass(frozen=True)
class SimulationReport:
    steps: list[StepReport]
    messages: int
    samples: int

    @property
    def message_ratio(self) -> float:
        return self.messages / self.samples if self.samples else 0.0

    @property
    def agreement(self) -> float:
        if not self.steps:
            return 1.0
        return sum(s.alarms == s.exact_alarm for s in self.steps) / len(self.steps)


def simulate(
        streams: np.ndarray,
        deltas: float | Sequence[float],
        alpha: float = 0.05,
        window_size: int = 100,
        k: Optional[int] = None,
) -> SimulationReport:
    """Run monitors and coordinator in lockstep next to the exact (unfiltered) scheme.

    `streams` is time × n.
    """
    streams = np.asarray(streams, dtype=float)
    steps, n = streams.shape
    widths = [float(deltas)] * n if np.isscalar(deltas) else [float(d) for d in deltas]   # type: ignore[arg-type]
    if len(widths) != n:
        raise ContractError('one filter width per stream')
    monitors = [MonitorState(index=i, delta=widths[i]) for i in range(n)]
    coordinator = CoordinatorState(n=n, window_size=window_size, alpha=alpha, k=k)
    bus = MessageBus()
    exact_window: collections.deque = collections.deque(maxlen=window_size)
    reports = []
    with timelogger(logger, f'Distributed simulation of {steps} steps'):
        for t in range(steps):
            sent_before = bus.sent
            for monitor, value in zip(monitors, streams[t]):
                message = monitor_step(monitor, float(value))
                if message is not None:
                    bus.send(message)
            decision = coordinator_step(coordinator, bus.drain())
            exact_window.append(streams[t])
            exact = (
                window_decision(np.array(exact_window), alpha, k, coordinator.sigma_mult)
                if len(exact_window) >= 2 else CoordinatorDecision(False, 0.0, math.inf)
            )
            reports.append(StepReport(step=t, alarms=decision.alarm, messages=bus.sent - sent_before,
                                      exact_alarm=exact.alarm))
    report = SimulationReport(steps=reports, messages=bus.sent, samples=steps * n)
    logger.info(f'Message ratio {report.message_ratio:.3f}, alarm agreement {report.agreement:.1%}')
    return report
