from netanomaly.anomography.transforms import TRANSFORM_KINDS, Transform, apply_transform, fourier_highpass
from netanomaly.anomography.inference import InferenceProblem, OmpResult, solve_omp, solve_pseudoinverse
from netanomaly.anomography.pipeline import SOLVERS, AnomographyResult, anomography_pipeline

__all__ = [
    'TRANSFORM_KINDS', 'Transform', 'apply_transform', 'fourier_highpass',
    'InferenceProblem', 'OmpResult', 'solve_omp', 'solve_pseudoinverse',
    'SOLVERS', 'AnomographyResult', 'anomography_pipeline',
]
