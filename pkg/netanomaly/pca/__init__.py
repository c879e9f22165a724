from netanomaly.pca.subspace import (
    AnomalyDirection, PcaModel, SpeResult, detectability_bound, fit_pca, identify_quantify,
    normalize_columns, q_threshold, spe_detect, split_subspace, subspace_detect,
)
from netanomaly.pca.entropy import EntropyMatrix, entropy_tensor, multiway_recast, sample_entropy
from netanomaly.pca.lagged import lagged_pca

__all__ = [
    'AnomalyDirection', 'PcaModel', 'SpeResult', 'detectability_bound', 'fit_pca', 'identify_quantify',
    'normalize_columns', 'q_threshold', 'spe_detect', 'split_subspace', 'subspace_detect',
    'EntropyMatrix', 'entropy_tensor', 'multiway_recast', 'sample_entropy', 'lagged_pca',
]
