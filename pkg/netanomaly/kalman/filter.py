"""
Linear state-space model of OD flow traffic observed through link counts:

    Y_t = A X_t + N_t        (N_t ~ N(0, R))
    X_{t+1} = C X_t + W_t    (W_t ~ N(0, Q))

and the Kalman filter producing the residual streams the detectors work on.
"""
import dataclasses
import logging
from typing import Optional

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.utils.logs import warn_once

logger = logging.getLogger(__name__)


JITTER = 1e-9
CONDITION_LIMIT = 1e12
PSD_TOLERANCE = 1e-8


def _symmetric_psd(name: str, m: np.ndarray):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f'{name} must be square')
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if not np.allclose(m, m.T, atol=PSD_TOLERANCE * scale):
        raise ContractError(f'{name} must be symmetric')
    if m.size and float(np.linalg.eigvalsh((m + m.T) / 2).min()) < -PSD_TOLERANCE * scale:
        raise ContractError(f'{name} must be positive semidefinite')


@dataclasses.dataclass(frozen=True)
class StateSpaceModel:
    """Matrices are constant, or stacked along a leading time axis for a time-varying model."""
    A: np.ndarray     # measurement (routing) matrix, m × n
    C: np.ndarray     # state transition, n × n
    Q: np.ndarray     # state noise covariance, n × n
    R: np.ndarray     # measurement noise covariance, m × m

    def __post_init__(self):
        for name in ('A', 'C', 'Q', 'R'):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        A, C, Q, R = self.at(0)
        m, n = A.shape
        if C.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
            raise ContractError(f'inconsistent dimensions: A is {m}×{n}, C {C.shape}, Q {Q.shape}, R {R.shape}')
        _symmetric_psd('Q', Q)
        _symmetric_psd('R', R)

    @classmethod
    def scalar(cls, A: float = 1.0, C: float = 1.0, Q: float = 1.0, R: float = 1.0) -> 'StateSpaceModel':
        return cls(A=np.array([[A]]), C=np.array([[C]]), Q=np.array([[Q]]), R=np.array([[R]]))

    @property
    def n(self) -> int:
        return self.at(0)[0].shape[1]

    @property
    def m(self) -> int:
        return self.at(0)[0].shape[0]

    def at(self, t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        def pick(matrix: np.ndarray) -> np.ndarray:
            return matrix[min(t, matrix.shape[0] - 1)] if matrix.ndim == 3 else matrix
        return pick(self.A), pick(self.C), pick(self.Q), pick(self.R)


@dataclasses.dataclass(frozen=True)
class FilterTrace:
    """Row t belongs to observation Y[t]; `x_pred[t]` is x̂_{t|t−1} and `x_filt[t]` is x̂_{t|t}."""
    x_pred: np.ndarray          # T × n
    x_filt: np.ndarray          # T × n
    P_pred: np.ndarray          # T × n × n
    P_filt: np.ndarray          # T × n × n
    K: np.ndarray               # T × n × m
    innovation: np.ndarray      # T × m   ε
    eta: np.ndarray             # T × n   η = Kε
    S: np.ndarray               # T × n × n   covariance of η
    tau: np.ndarray             # T × n   estimate of the prediction error plus η

    def tau_scale(self) -> np.ndarray:
        """Standard deviation √P_{t|t} of every state component (T × n)."""
        return np.sqrt(np.clip(np.diagonal(self.P_filt, axis1=1, axis2=2), 0.0, None))


def _regularized(m: np.ndarray, name: str) -> np.ndarray:
    if m.size and np.linalg.cond(m) < CONDITION_LIMIT:
        return m
    trace = float(np.trace(m))
    jitter = JITTER * trace if trace > 0 else JITTER
    warn_once(logger, f'Near-singular {name}; adding {JITTER:g}·trace to the diagonal')
    return m + jitter * np.eye(m.shape[0])


def kalman_filter(model: StateSpaceModel, Y: np.ndarray, x0: np.ndarray,
                  P0: np.ndarray) -> FilterTrace:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != model.m and Y.shape[0] == model.m:
        Y = Y.T
    T, m = Y.shape
    n = model.n
    if m != model.m:
        raise ContractError(f'observations have {m} components, the model expects {model.m}')
    x = np.asarray(x0, dtype=float).reshape(n)
    P = np.atleast_2d(np.asarray(P0, dtype=float))
    if P.shape != (n, n):
        raise ContractError(f'P0 must be {n}×{n}')
    _symmetric_psd('P0', P)

    x_pred = np.zeros((T, n))
    x_filt = np.zeros((T, n))
    P_pred = np.zeros((T, n, n))
    P_filt = np.zeros((T, n, n))
    gains = np.zeros((T, n, m))
    innovations = np.zeros((T, m))
    etas = np.zeros((T, n))
    S_all = np.zeros((T, n, n))
    taus = np.zeros((T, n))
    identity = np.eye(n)
    for t in range(T):
        A, C, Q, R = model.at(t)
        x_prior = C @ x
        P_prior = C @ P @ C.T + Q
        innovation_cov = _regularized(A @ P_prior @ A.T + R, 'innovation covariance')
        K = P_prior @ A.T @ np.linalg.inv(innovation_cov)
        innovation = Y[t] - A @ x_prior
        x = x_prior + K @ innovation
        joseph = identity - K @ A
        P = joseph @ P_prior @ joseph.T + K @ R @ K.T
        P = (P + P.T) / 2
        _symmetric_psd(f'P_{{{t}|{t}}}', P)

        eta = K @ innovation
        S = K @ innovation_cov @ K.T
        tau = -K @ A @ P_prior @ np.linalg.solve(_regularized(S, 'residual covariance S'), eta) \
            if np.any(eta) else np.zeros(n)

        x_pred[t], x_filt[t] = x_prior, x
        P_pred[t], P_filt[t] = P_prior, P
        gains[t], innovations[t], etas[t], S_all[t], taus[t] = K, innovation, eta, S, tau
    return FilterTrace(x_pred=x_pred, x_filt=x_filt, P_pred=P_pred, P_filt=P_filt, K=gains,
                       innovation=innovations, eta=etas, S=S_all, tau=taus)


def simulate(model: StateSpaceModel, steps: int, x0: np.ndarray,
             rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw (states, observations) from the model; row t is X_t and Y_t."""
    rng = rng or np.random.default_rng(0)
    x = np.asarray(x0, dtype=float).reshape(model.n)
    states = np.zeros((steps, model.n))
    observations = np.zeros((steps, model.m))
    for t in range(steps):
        A, C, Q, R = model.at(t)
        x = C @ x + rng.multivariate_normal(np.zeros(model.n), Q, method='eigh')
        states[t] = x
        observations[t] = A @ x + rng.multivariate_normal(np.zeros(model.m), R, method='eigh')
    return states, observations
