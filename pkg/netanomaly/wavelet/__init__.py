from netanomaly.wavelet.framelet import (
    DEFAULT_BANK, FILTER_BANKS, BandDecomposition, FilterBank, analyze, get_bank, synthesize,
)
from netanomaly.wavelet.bands import Bands, band_split, local_variability_detect

__all__ = [
    'DEFAULT_BANK', 'FILTER_BANKS', 'BandDecomposition', 'FilterBank', 'analyze', 'get_bank', 'synthesize',
    'Bands', 'band_split', 'local_variability_detect',
]
