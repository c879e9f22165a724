from netanomaly.kalman.filter import FilterTrace, StateSpaceModel, kalman_filter
from netanomaly.kalman.detectors import METHODS, Detection, DetectorParams, detect
from netanomaly.kalman.roc import RocCurve, benchmark_aucs, mean_shift_benchmark, roc_curve

__all__ = [
    'FilterTrace', 'StateSpaceModel', 'kalman_filter', 'METHODS', 'Detection', 'DetectorParams', 'detect',
    'RocCurve', 'benchmark_aucs', 'mean_shift_benchmark', 'roc_curve',
]
