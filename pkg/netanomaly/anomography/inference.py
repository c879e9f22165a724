import dataclasses
import logging
from typing import Optional

import numpy as np
import scipy.linalg

from netanomaly.errors import ContractError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class InferenceProblem:
    """ỹ = A x̃ with A the m × n routing matrix; `y_tilde` is one m-vector or m × T columns."""
    A: np.ndarray
    y_tilde: np.ndarray
    routing: bool = True            # False admits general sensing matrices

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        y = np.asarray(self.y_tilde, dtype=float)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise ContractError('routing matrix and link anomalies must be finite')
        if self.routing and (np.any(A < 0) or np.any(A > 1)):
            raise ContractError('routing matrix entries must lie in [0, 1]')
        if y.shape[0] != A.shape[0]:
            raise ContractError(f'ỹ has {y.shape[0]} rows, the routing matrix {A.shape[0]} links')
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'y_tilde', y)


def solve_pseudoinverse(problem: InferenceProblem) -> np.ndarray:
    """Minimum-l2-norm (least-squares if inconsistent) solution through the SVD-based pseudo-inverse."""
    if not np.any(problem.A):
        raise ContractError('the routing matrix must not be all zeros')
    return scipy.linalg.pinv(problem.A) @ problem.y_tilde


@dataclasses.dataclass(frozen=True)
class OmpResult:
    x: np.ndarray
    support: list[int]              # in selection order
    residual_norms: list[float]     # ‖ỹ‖ first, then after every selection


def solve_omp(problem: InferenceProblem, k: Optional[int] = None, tol: Optional[float] = None) -> OmpResult:
    """Orthogonal matching pursuit for one m-vector ỹ.

    Every iteration selects the column most correlated with the residual and refits all
    selected columns by least squares. Stops after k columns, once the residual norm drops
    below `tol`, or when no column correlates with the residual any more. Without k the
    number of columns is capped at min(m, n).
    """
    A = problem.A
    y = problem.y_tilde
    if y.ndim != 1:
        raise ContractError('solve_omp takes a single ỹ vector')
    m, n = A.shape
    norms = np.linalg.norm(A, axis=0)
    if not np.any(norms):
        raise ContractError('the routing matrix must not be all zeros')
    if k is not None and not 0 <= k <= n:
        raise ContractError(f'0 ≤ k ≤ n (k={k}, n={n})')
    limit = k if k is not None else min(m, n)
    atoms = np.where(norms > 0, A / np.where(norms > 0, norms, 1.0), 0.0)

    x = np.zeros(n)
    support: list[int] = []
    residual = y.copy()
    residual_norms = [float(np.linalg.norm(residual))]
    coefficients = np.zeros(0)
    while len(support) < limit and not (tol is not None and residual_norms[-1] < tol):
        correlation = np.abs(atoms.T @ residual)
        correlation[support] = 0.0
        candidate = int(np.argmax(correlation))
        if correlation[candidate] <= 1e-12 * max(residual_norms[0], 1.0):
            break
        support.append(candidate)
        coefficients, *_ = scipy.linalg.lstsq(A[:, support], y)
        residual = y - A[:, support] @ coefficients
        residual_norms.append(float(np.linalg.norm(residual)))
    x[support] = coefficients
    logger.debug(f'OMP: {len(support)} columns, residual {residual_norms[-1]:.4g}')
    return OmpResult(x=x, support=support, residual_norms=residual_norms)
