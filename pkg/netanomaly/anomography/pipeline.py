import csv
import dataclasses
import logging
from typing import Hashable, Literal, Optional, Sequence, TextIO, TypeAlias

import numpy as np

from netanomaly.anomography.inference import InferenceProblem, solve_omp, solve_pseudoinverse
from netanomaly.anomography.transforms import Transform, apply_transform
from netanomaly.core.alarm import Alarm
from netanomaly.core.traffic import TrafficMatrix
from netanomaly.errors import ContractError
from netanomaly.utils.logs import timelogger

logger = logging.getLogger(__name__)


Solver: TypeAlias = Literal['pinv', 'omp']
SOLVERS: tuple[Solver, ...] = ('pinv', 'omp')


@dataclasses.dataclass(frozen=True)
class AnomographyResult:
    y_tilde: np.ndarray             # time bins × links
    x_tilde: np.ndarray             # time bins × flows
    alarms: list[Alarm]
    flow_ids: tuple[Hashable, ...]

    def write_csv(self, out: TextIO):
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(('time', 'flow', 'value'))
        for t, row in enumerate(self.x_tilde):
            for flow, value in zip(self.flow_ids, row):
                writer.writerow((t, flow, repr(float(value))))


def mad_outliers(values: np.ndarray, multiplier: float = 5.0, floor: float = 0.0) -> tuple[np.ndarray, float, float]:
    """Indices with |v − median| > max(multiplier · MAD, floor), the median and the threshold."""
    median = float(np.median(values))
    mad = float(np.median(np.abs(values - median)))
    threshold = max(multiplier * mad, floor)
    return np.flatnonzero(np.abs(values - median) > threshold), median, threshold


def flow_level(values: np.ndarray, A: np.ndarray) -> float:
    """Typical volume of one flow in one time bin: link volume over routed hops, median over time."""
    hops = float(A.sum())
    return float(np.median(values.sum(axis=1))) / hops if hops > 0 else 0.0


def anomography_pipeline(
        Y: TrafficMatrix | np.ndarray,
        A: np.ndarray,
        transform: Transform,
        solver: Solver = 'omp',
        sparsity: Optional[int] = None,
        tol_fraction: float = 0.05,
        mad_multiplier: float = 5.0,
        flow_ids: Optional[Sequence[Hashable]] = None,
) -> AnomographyResult:
    """Late-inverse anomography: extract Ỹ from the link loads, then infer x̃ per time bin.

    OMP stops after `sparsity` flows or once the residual drops below `tol_fraction` of ‖ỹ_t‖.
    A flow alarms in a time bin when its x̃ deviates from the median over all flows by more
    than `mad_multiplier` median absolute deviations. OMP rows are sparse, so their MAD is
    mostly zero; the threshold is floored at `mad_multiplier` times the MAD of the non-zero
    x̃ entries of all bins and at `tol_fraction` of the typical flow volume.
    """
    values = Y.values if isinstance(Y, TrafficMatrix) else np.asarray(Y, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if values.ndim != 2 or values.shape[1] != A.shape[0]:
        raise ContractError(f'Y has {values.shape[-1]} link columns, the routing matrix {A.shape[0]} rows')
    flow_ids = tuple(flow_ids) if flow_ids is not None else tuple(range(A.shape[1]))
    if len(flow_ids) != A.shape[1]:
        raise ContractError('one flow id per routing matrix column is required')

    y_tilde = apply_transform(values, transform)
    with timelogger(logger, f'Anomography inference ({solver}) over {values.shape[0]} time bins'):
        if solver == 'pinv':
            x_tilde = solve_pseudoinverse(InferenceProblem(A=A, y_tilde=y_tilde.T)).T
        elif solver == 'omp':
            x_tilde = np.zeros((values.shape[0], A.shape[1]))
            for t, y in enumerate(y_tilde):
                problem = InferenceProblem(A=A, y_tilde=y)
                x_tilde[t] = solve_omp(problem, k=sparsity, tol=tol_fraction * float(np.linalg.norm(y))).x
        else:
            raise ContractError(f'unknown solver {solver!r} (choose from {", ".join(SOLVERS)})')

    support = x_tilde != 0.0
    centered = x_tilde - np.median(x_tilde, axis=1, keepdims=True)
    pooled = float(np.median(np.abs(centered[support]))) if support.any() else 0.0
    floor = max(mad_multiplier * pooled, tol_fraction * flow_level(values, A))
    logger.debug(f'Anomography alarm floor {floor:.6g} (pooled MAD {pooled:.6g})')

    alarms = []
    for t, row in enumerate(x_tilde):
        indices, median, threshold = mad_outliers(row, mad_multiplier, floor)
        alarms.extend(
            Alarm(t_index=t, detector=f'anomography-{transform.kind}-{solver}', score=abs(row[f] - median),
                  threshold=threshold, keys=(f'flow={flow_ids[f]}', f'x={row[f]:.6g}'))
            for f in indices
        )
    logger.info(f'Anomography: {len(alarms)} anomalous flow-bins')
    return AnomographyResult(y_tilde=y_tilde, x_tilde=x_tilde, alarms=alarms, flow_ids=flow_ids)
