"""
The small numeric kit shared by the detectors.
"""
import numpy as np
import scipy.linalg
import scipy.special

from netanomaly.errors import ContractError


SYMMETRY_TOLERANCE = 1e-9


def sym_eigen(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (as columns)."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractError(f'square matrix required, got shape {matrix.shape}')
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=SYMMETRY_TOLERANCE * max(1.0, float(np.abs(matrix).max(initial=0.0)))):
        raise ContractError('matrix must be symmetric')
    eigenvalues, eigenvectors = scipy.linalg.eigh((matrix + matrix.T) / 2)
    order = np.argsort(eigenvalues)[::-1]
    return eigenvalues[order], eigenvectors[:, order]


def normal_quantile(p: float) -> float:
    """z with Φ(z) = p."""
    if not 0.0 < p < 1.0:
        raise ContractError(f'0 < p < 1, got p={p}')
    return float(scipy.special.ndtri(p))
