from netanomaly.extraction.histograms import HistogramClone, clone_histograms, clone_series, distribution, kl_distance
from netanomaly.extraction.kl import KlDetection, identify_values, kl_detect
from netanomaly.extraction.apriori import ItemSet, apriori, transaction, write_itemsets
from netanomaly.extraction.pipeline import ExtractConfig, ExtractionResult, extract_pipeline

__all__ = [
    'HistogramClone', 'clone_histograms', 'clone_series', 'distribution', 'kl_distance',
    'KlDetection', 'identify_values', 'kl_detect', 'ItemSet', 'apriori', 'transaction', 'write_itemsets',
    'ExtractConfig', 'ExtractionResult', 'extract_pipeline',
]
