"""
Entropy features for the subspace method.

Anomalies disperse or concentrate feature distributions (a port scan disperses DP and
concentrates DIP). Per time bin and flow we summarize the SIP, DIP, SP and DP histograms by
their sample entropy, giving a t × p × 4 tensor that is recast to a t × 4p matrix.
"""
import dataclasses
import math
from collections import defaultdict
from typing import Hashable, Sequence

import numpy as np

from netanomaly.core.records import FlowRecord
from netanomaly.core.traffic import DEFAULT_BIN_WIDTH, Histogram, KeySelector, KEY_SELECTORS, TrafficMatrix, time_bin
from netanomaly.errors import ContractError, DegenerateDataError

ENTROPY_FEATURES = ('sip', 'dip', 'sp', 'dp')


def sample_entropy(histogram: Histogram) -> float:
    total = histogram.total
    if total == 0:
        raise DegenerateDataError('empty histogram')
    entropy = 0.0
    for count in histogram.counts.values():
        if count > 0:
            share = count / total
            entropy -= share * math.log2(share)
    return entropy


@dataclasses.dataclass(frozen=True)
class EntropyMatrix:
    """Columns in blocks SIP | DIP | SP | DP with p flows per block."""
    values: np.ndarray
    flow_ids: tuple[Hashable, ...]

    @property
    def p(self) -> int:
        return len(self.flow_ids)

    def to_traffic_matrix(self, bin_width: float = DEFAULT_BIN_WIDTH, t0: float = 0.0) -> TrafficMatrix:
        series_ids = tuple(f'{feature}:{flow}' for feature in ENTROPY_FEATURES for flow in self.flow_ids)
        return TrafficMatrix(values=self.values, bin_width=bin_width, series_ids=series_ids, t0=t0)


def multiway_recast(tensor: np.ndarray, flow_ids: Sequence[Hashable] | None = None) -> EntropyMatrix:
    """t × p × 4 → t × 4p, one block of p columns per feature."""
    if tensor.ndim != 3 or tensor.shape[2] != len(ENTROPY_FEATURES):
        raise ContractError(f'expected a t × p × 4 tensor, got shape {tensor.shape}')
    t, p, _ = tensor.shape
    values = tensor.transpose(0, 2, 1).reshape(t, 4 * p)
    return EntropyMatrix(values=values, flow_ids=tuple(flow_ids) if flow_ids is not None else tuple(range(p)))


def multiway_uncast(matrix: EntropyMatrix) -> np.ndarray:
    t = matrix.values.shape[0]
    return matrix.values.reshape(t, len(ENTROPY_FEATURES), matrix.p).transpose(0, 2, 1)


def entropy_tensor(
        records: Sequence[FlowRecord],
        bin_width: float = DEFAULT_BIN_WIDTH,
        flow_key: KeySelector = KEY_SELECTORS['dip24'],
        t0: float | None = None,
) -> tuple[np.ndarray, tuple[Hashable, ...]]:
    """Packet-weighted feature entropies per (time bin, flow); empty cells are 0."""
    if not records:
        raise ContractError('records non-empty')
    if t0 is None:
        t0 = math.floor(min(r.t for r in records) / bin_width) * bin_width
    counts: dict[tuple[int, Hashable], list[dict[int, int]]] = defaultdict(lambda: [defaultdict(int) for _ in ENTROPY_FEATURES])
    n_bins = 0
    for r in records:
        i = time_bin(r.t, t0, bin_width)
        n_bins = max(n_bins, i + 1)
        histograms = counts[(i, flow_key(r))]
        for f, feature in enumerate(ENTROPY_FEATURES):
            histograms[f][r.feature(feature)] += r.packets
    flows = tuple(sorted({flow for _, flow in counts}))
    column = {flow: j for j, flow in enumerate(flows)}
    tensor = np.zeros((n_bins, len(flows), len(ENTROPY_FEATURES)))
    for (i, flow), histograms in counts.items():
        for f, feature in enumerate(ENTROPY_FEATURES):
            tensor[i, column[flow], f] = sample_entropy(Histogram(feature=feature, counts=dict(histograms[f])))
    return tensor, flows
