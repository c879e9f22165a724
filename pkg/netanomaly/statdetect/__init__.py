from netanomaly.statdetect.glr import (
    AnomalyOperator, GlrConfig, ar_glr, build_operator, combined_measure, glr_series, statglr_detect,
)
from netanomaly.statdetect.astute import AstuteResult, astute_detect, astute_test

__all__ = [
    'AnomalyOperator', 'GlrConfig', 'ar_glr', 'build_operator', 'combined_measure', 'glr_series',
    'statglr_detect', 'AstuteResult', 'astute_detect', 'astute_test',
]
