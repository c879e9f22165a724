"""
Flow equilibrium test: in normal operation the per-flow volume changes between two
consecutive time slots average out to zero, so a confidence interval for their mean that
excludes zero flags many small, correlated changes.
"""
import dataclasses
import logging
import math

import numpy as np

from netanomaly.core.alarm import Alarm
from netanomaly.core.numeric import normal_quantile
from netanomaly.core.traffic import TrafficMatrix
from netanomaly.errors import ContractError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class AstuteResult:
    mean: float
    ci: tuple[float, float]
    alarm: bool
    flows: int

    @property
    def score(self) -> float:
        """Distance of the CI from zero; 0 when the CI contains zero."""
        return 0.0 if not self.alarm else min(abs(self.ci[0]), abs(self.ci[1]))


def astute_test(flow_matrix: np.ndarray, p: float = 0.05) -> AstuteResult:
    """Test the |F|×2 volumes of the flows at slots i and i+1."""
    flow_matrix = np.asarray(flow_matrix, dtype=float)
    if flow_matrix.ndim != 2 or flow_matrix.shape[1] != 2:
        raise ContractError(f'flow matrix must be |F|×2, got shape {flow_matrix.shape}')
    flows = flow_matrix.shape[0]
    if flows < 2:
        raise ContractError(f'|F| ≥ 2, got {flows}')
    deltas = flow_matrix[:, 1] - flow_matrix[:, 0]
    mean = float(deltas.mean())
    sigma = float(deltas.std(ddof=1))
    half_width = normal_quantile(1 - p / 2) * sigma / math.sqrt(flows)
    ci = (mean - half_width, mean + half_width)
    # σ̂ = 0 collapses the interval to {δ̂}
    alarm = not ci[0] <= 0.0 <= ci[1]
    return AstuteResult(mean=mean, ci=ci, alarm=alarm, flows=flows)


def astute_detect(matrix: TrafficMatrix, p: float = 0.05) -> tuple[list[AstuteResult], list[Alarm]]:
    """Test every pair of consecutive bins over the flows active in either of them.

    The alarm of the pair (i, i+1) is reported at bin i+1.
    """
    results = []
    alarms = []
    for i in range(matrix.m - 1):
        pair = matrix.values[i:i + 2].T
        active = pair[np.any(pair != 0, axis=1)]
        if active.shape[0] < 2:
            logger.debug(f'Bins {i}/{i + 1}: fewer than two active flows, skipped')
            continue
        result = astute_test(active, p)
        results.append(result)
        if result.alarm:
            alarms.append(Alarm(t_index=i + 1, detector='astute', score=result.score, threshold=0.0,
                                keys=(f'flows={result.flows}', f'mean={result.mean:.6g}')))
    logger.info(f'ASTUTE: {len(alarms)} of {len(results)} bin pairs out of equilibrium (p={p})')
    return results, alarms
