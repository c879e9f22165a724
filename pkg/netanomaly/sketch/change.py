import dataclasses
import logging
import math
from typing import Iterable, Sequence

from netanomaly.core.alarm import Alarm
from netanomaly.core.records import FlowRecord
from netanomaly.core.traffic import DEFAULT_BIN_WIDTH, time_bin
from netanomaly.errors import ContractError
from netanomaly.sketch.forecast import ForecastModel, forecast
from netanomaly.sketch.hashing import hash_family
from netanomaly.sketch.kary import DEFAULT_BUCKETS, DEFAULT_ROWS, KarySketch

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ChangeResult:
    error: KarySketch          # S_e = S_o − S_f
    threshold: float           # R_A
    alarmed: list[tuple[int, float]]   # (key, estimated change)


def change_detect(observed: KarySketch, forecasted: KarySketch, r: float,
                  keys: Iterable[int] = ()) -> ChangeResult:
    """Keys whose estimated forecast error exceeds R·√F̂₂(S_e)."""
    if r <= 0:
        raise ContractError('R > 0')
    error = observed - forecasted
    threshold = r * math.sqrt(max(error.estimate_f2(), 0.0))
    alarmed = []
    for key in keys:
        change = error.estimate(key)
        if abs(change) > threshold:
            alarmed.append((key, change))
    return ChangeResult(error=error, threshold=threshold, alarmed=alarmed)


def interval_sketches(records: Sequence[FlowRecord], key_of, bin_width: float = DEFAULT_BIN_WIDTH,
                      rows: int = DEFAULT_ROWS, buckets: int = DEFAULT_BUCKETS, seed: int = 0,
                      measure: str = 'bytes') -> tuple[list[KarySketch], list[set[int]]]:
    """One observed sketch per time bin (shared seeds) plus the keys seen in each bin."""
    if not records:
        raise ContractError('records non-empty')
    hashes = hash_family(rows, buckets, seed)
    t0 = math.floor(min(r.t for r in records) / bin_width) * bin_width
    n_bins = max(time_bin(r.t, t0, bin_width) for r in records) + 1
    sketches = [KarySketch(hashes) for _ in range(n_bins)]
    keys: list[set[int]] = [set() for _ in range(n_bins)]
    for record in records:
        i = time_bin(record.t, t0, bin_width)
        key = key_of(record)
        sketches[i].update(key, record.bytes if measure == 'bytes' else record.packets)
        keys[i].add(key)
    return sketches, keys


def sketch_change_detect(
        records: Sequence[FlowRecord],
        model: ForecastModel,
        r: float,
        key_of=lambda record: record.dip,
        bin_width: float = DEFAULT_BIN_WIDTH,
        rows: int = DEFAULT_ROWS,
        buckets: int = DEFAULT_BUCKETS,
        seed: int = 0,
        format_key=str,
) -> list[Alarm]:
    """Forecast every interval's sketch from its predecessors and report keys with large changes."""
    sketches, keys = interval_sketches(records, key_of, bin_width, rows, buckets, seed)
    alarms = []
    for t in range(model.warmup, len(sketches)):
        result = change_detect(sketches[t], forecast(model, sketches[:t]), r, sorted(keys[t] | keys[t - 1]))
        for key, change in result.alarmed:
            alarms.append(Alarm(t_index=t, detector=f'sketch-{model.kind.lower()}', score=abs(change),
                                threshold=result.threshold, keys=(format_key(key),)))
    logger.info(f'Sketch change detection raised {len(alarms)} alarms over {len(sketches)} intervals')
    return alarms
