"""
Shared data model: flow records, traffic matrices, histograms, alarms and numeric helpers.
"""
from netanomaly.core.alarm import Alarm, write_alarms
from netanomaly.core.numeric import normal_quantile, sym_eigen
from netanomaly.core.records import FEATURES, Feature, FlowRecord, parse_flow_records, write_flow_records
from netanomaly.core.traffic import (
    DEFAULT_BIN_WIDTH, KEY_SELECTORS, Histogram, TrafficMatrix, bin_traffic, feature_histogram,
)

__all__ = [
    'Alarm', 'write_alarms', 'normal_quantile', 'sym_eigen', 'FEATURES', 'Feature', 'FlowRecord',
    'parse_flow_records', 'write_flow_records', 'DEFAULT_BIN_WIDTH', 'KEY_SELECTORS', 'Histogram',
    'TrafficMatrix', 'bin_traffic', 'feature_histogram',
]
