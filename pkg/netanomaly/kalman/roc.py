import dataclasses
import logging
from typing import Sequence, TextIO

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.kalman.detectors import METHODS, DetectorParams, detect
from netanomaly.kalman.filter import StateSpaceModel, kalman_filter

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def write_csv(self, out: TextIO):
        out.write('fpr,tpr\n')
        for f, t in zip(self.fpr, self.tpr):
            out.write(f'{f:.6f},{t:.6f}\n')
        out.write(f'auc={self.auc:.6f}\n')

    def threshold_for_fpr(self, target: float) -> float:
        """Lowest threshold (alarm on score ≥ threshold) whose false positive rate stays ≤ target."""
        if not 0.0 <= target <= 1.0:
            raise ContractError('0 ≤ target false positive rate ≤ 1')
        admissible = np.flatnonzero(self.fpr <= target)
        return float(self.thresholds[admissible[-1]])


def roc_curve(scores: Sequence[float] | np.ndarray, labels: Sequence[bool] | np.ndarray) -> RocCurve:
    """Sweep the threshold over all distinct scores (highest first); tied scores enter together."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ContractError('one label per score')
    positives = int(labels.sum())
    negatives = labels.size - positives
    if positives == 0 or negatives == 0:
        raise ContractError('ROC needs at least one positive and one negative label')
    order = np.argsort(-scores, kind='stable')
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(~sorted_labels)
    # last position of every run of equal scores
    ends = np.flatnonzero(np.append(np.diff(sorted_scores) != 0, True))
    tpr = np.concatenate(([0.0], tp[ends] / positives))
    fpr = np.concatenate(([0.0], fp[ends] / negatives))
    thresholds = np.concatenate(([np.inf], sorted_scores[ends]))
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc)


@dataclasses.dataclass(frozen=True)
class Benchmark:
    tau: np.ndarray
    scale: np.ndarray
    labels: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        """Residuals in units of their own standard deviation, sign flipped so the shift is positive."""
        return -self.tau / self.scale


def mean_shift_benchmark(length: int = 1000, shift: float = 3.0, duration: int = 20,
                         seed: int = 0) -> Benchmark:
    """Residuals of a Kalman filter tracking a noisy constant level, with a level shift of
    `shift` noise deviations injected into the observations for `duration` steps."""
    if duration >= length:
        raise ContractError('the shift must be shorter than the series')
    rng = np.random.default_rng(seed)
    start = int(rng.integers(length // 4, length - duration - length // 4))
    observations = rng.normal(0.0, 1.0, length)
    observations[start:start + duration] += shift
    labels = np.zeros(length, dtype=bool)
    labels[start:start + duration] = True
    # a slow random walk started at its steady-state uncertainty keeps the gain small and constant
    model = StateSpaceModel.scalar(A=1.0, C=1.0, Q=1e-6, R=1.0)
    trace = kalman_filter(model, observations.reshape(-1, 1), x0=np.zeros(1), P0=np.array([[1e-3]]))
    return Benchmark(tau=trace.tau[:, 0], scale=np.sqrt(trace.S[:, 0, 0]), labels=labels)


def benchmark_aucs(benchmark: Benchmark, params: DetectorParams = DetectorParams(mu1=3.0)) -> dict[str, float]:
    """AUC of every detector on the benchmark; the cusum level μ₁ is in noise deviations."""
    aucs = {}
    for method in METHODS:
        if method == 'variance':
            detection = detect(benchmark.tau, method, params, scale=benchmark.scale)
        elif method == 'cusum':
            detection = detect(benchmark.normalized, method, dataclasses.replace(params, sigma=1.0))
        else:
            detection = detect(benchmark.normalized, method, params)
        aucs[method] = roc_curve(detection.scores, benchmark.labels).auc
        logger.info(f'{method}: AUC {aucs[method]:.4f}')
    return aucs
