import csv
import dataclasses
import logging
import math
from collections import Counter, defaultdict
from typing import Callable, Hashable, Iterable, Literal, Optional, Sequence, TextIO, TypeAlias

import numpy as np

from netanomaly.core.records import FlowRecord, Feature, FEATURES, csv_rows
from netanomaly.errors import ContractError, ParseError

logger = logging.getLogger(__name__)


DEFAULT_BIN_WIDTH = 300.0    # seconds

Measure: TypeAlias = Literal['bytes', 'packets']
KeySelector: TypeAlias = Callable[[FlowRecord], Hashable]

KEY_SELECTORS: dict[str, KeySelector] = {
    'sip': lambda r: r.sip,
    'dip': lambda r: r.dip,
    'od': lambda r: (r.sip, r.dip),
    'flow': FlowRecord.five_tuple,
    'dip24': lambda r: r.dip >> 8,
}


@dataclasses.dataclass(frozen=True)
class TrafficMatrix:
    """Time bins (rows) × series (columns)."""
    values: np.ndarray
    bin_width: float
    series_ids: tuple[Hashable, ...]
    t0: float = 0.0

    def __post_init__(self):
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ContractError(f'a traffic matrix needs m ≥ 1 rows and n ≥ 1 columns, got shape {self.values.shape}')
        if not np.all(np.isfinite(self.values)):
            raise ContractError('traffic matrix values must be finite')
        if len(self.series_ids) != self.values.shape[1]:
            raise ContractError('one series id per column is required')
        if self.bin_width <= 0:
            raise ContractError('bin_width > 0')

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def time_bin(t: float, t0: float, bin_width: float) -> int:
    return math.floor((t - t0) / bin_width)


def bin_traffic(
        records: Sequence[FlowRecord],
        bin_width: float = DEFAULT_BIN_WIDTH,
        key: KeySelector = KEY_SELECTORS['od'],
        measure: Measure = 'bytes',
        t0: Optional[float] = None,
        n_bins: Optional[int] = None,
) -> TrafficMatrix:
    """Sum the traffic of each series (selected by `key`) in every time bin.

    Series are ordered by key, so the result does not depend on record order.
    """
    if bin_width <= 0:
        raise ContractError('bin_width > 0')
    if not records:
        raise ContractError('records non-empty')
    if t0 is None:
        t0 = math.floor(min(r.t for r in records) / bin_width) * bin_width
    cells: dict[tuple[int, Hashable], int] = defaultdict(int)
    last_bin = 0
    for r in records:
        i = time_bin(r.t, t0, bin_width)
        if i < 0 or (n_bins is not None and i >= n_bins):
            continue
        last_bin = max(last_bin, i)
        cells[(i, key(r))] += r.bytes if measure == 'bytes' else r.packets
    series_ids = tuple(sorted({k for _, k in cells}))
    column = {k: j for j, k in enumerate(series_ids)}
    values = np.zeros((n_bins if n_bins is not None else last_bin + 1, max(len(series_ids), 1)))
    for (i, k), volume in cells.items():
        values[i, column[k]] += volume
    return TrafficMatrix(values=values, bin_width=bin_width, series_ids=series_ids or ('none',), t0=t0)


@dataclasses.dataclass(frozen=True)
class Histogram:
    feature: Feature
    counts: dict[int, int]

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise ContractError(f'unknown feature {self.feature!r}')
        if any(c < 0 for c in self.counts.values()):
            raise ContractError('histogram counts must be nonnegative')

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def feature_histogram(
        records: Iterable[FlowRecord],
        feature: Feature,
        bin_index: Optional[int] = None,
        bin_width: float = DEFAULT_BIN_WIDTH,
        t0: float = 0.0,
        weight: Literal['packets', 'flows', 'bytes'] = 'packets',
) -> Histogram:
    """Distribution of `feature` in one time bin (all records if `bin_index` is None)."""
    if feature not in FEATURES:
        raise ContractError(f'unknown feature {feature!r}')
    counts: Counter[int] = Counter()
    for r in records:
        if bin_index is not None and time_bin(r.t, t0, bin_width) != bin_index:
            continue
        counts[r.feature(feature)] += 1 if weight == 'flows' else getattr(r, weight)
    return Histogram(feature=feature, counts=dict(counts))


def read_link_csv(stream: TextIO | Iterable[str], bin_width: float = DEFAULT_BIN_WIDTH) -> TrafficMatrix:
    """Link loads in the `t,link_id,bytes` format, binned like flow records."""
    if bin_width <= 0:
        raise ContractError('bin_width > 0')
    reader = csv_rows(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != ('t', 'link_id', 'bytes'):
        raise ParseError('expected header t,link_id,bytes', line_number=1)
    rows: list[tuple[float, str, float]] = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f'expected 3 fields, found {len(row)}', line_number)
        try:
            t, volume = float(row[0]), float(row[2])
        except ValueError as e:
            raise ParseError(str(e), line_number) from e
        if not (math.isfinite(t) and math.isfinite(volume)):
            raise ParseError('non-finite value', line_number)
        rows.append((t, row[1].strip(), volume))
    if not rows:
        raise ParseError('no link measurements')
    t0 = math.floor(min(t for t, _, _ in rows) / bin_width) * bin_width
    links = sorted({link for _, link, _ in rows}, key=_natural_key)
    column = {link: j for j, link in enumerate(links)}
    values = np.zeros((max(time_bin(t, t0, bin_width) for t, _, _ in rows) + 1, len(links)))
    for t, link, volume in rows:
        values[time_bin(t, t0, bin_width), column[link]] += volume
    return TrafficMatrix(values=values, bin_width=bin_width, series_ids=tuple(links), t0=t0)


def _natural_key(label: str) -> tuple[int, int | str]:
    return (0, int(label)) if label.isdigit() else (1, label)


def write_link_csv(matrix: TrafficMatrix, out: TextIO):
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(('t', 'link_id', 'bytes'))
    for i in range(matrix.m):
        for j, link in enumerate(matrix.series_ids):
            writer.writerow((repr(matrix.t0 + i * matrix.bin_width), link, repr(float(matrix.values[i, j]))))


def read_routing_matrix(stream: TextIO) -> np.ndarray:
    """First line `m n`, then m rows of n reals."""
    lines = [line.split() for line in stream if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise ParseError('first line must be "m n"', line_number=1)
    try:
        m, n = int(lines[0][0]), int(lines[0][1])
        rows = [[float(v) for v in line] for line in lines[1:]]
    except ValueError as e:
        raise ParseError(f'malformed routing matrix: {e}') from e
    if len(rows) != m:
        raise ParseError(f'expected {m} rows, found {len(rows)}')
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ParseError(f'expected {n} columns, found {len(row)}', line_number=i + 2)
    matrix = np.array(rows, dtype=float).reshape(m, n)
    if not np.all(np.isfinite(matrix)):
        raise ParseError('routing matrix entries must be finite')
    return matrix


def write_routing_matrix(matrix: np.ndarray, out: TextIO):
    out.write(f'{matrix.shape[0]} {matrix.shape[1]}\n')
    for row in matrix:
        out.write(' '.join(repr(float(v)) for v in row) + '\n')
