import dataclasses
import logging
import math
from typing import Optional, Sequence

from netanomaly.core.alarm import Alarm
from netanomaly.core.records import FEATURES, Feature, FlowRecord, format_feature_value
from netanomaly.core.traffic import DEFAULT_BIN_WIDTH, time_bin
from netanomaly.errors import ConfigError, ContractError
from netanomaly.extraction.apriori import ItemSet, apriori
from netanomaly.extraction.histograms import clone_seeds, clone_series
from netanomaly.extraction.kl import DEFAULT_SMOOTHING, interval_values, kl_detect

logger = logging.getLogger(__name__)


DETECTOR_FEATURES: tuple[Feature, ...] = ('sip', 'dip', 'sp', 'dp', 'packets', 'bytes')


@dataclasses.dataclass(frozen=True)
class ExtractConfig:
    features: tuple[Feature, ...] = DETECTOR_FEATURES
    clones: int = 3                 # k
    bins: int = 256                 # m
    training_intervals: int = 20
    bin_width: float = DEFAULT_BIN_WIDTH
    sigma_mult: float = 3.0
    smoothing: float = DEFAULT_SMOOTHING
    min_support: int = 10_000
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.features) - set(FEATURES)
        if unknown or not self.features:
            raise ConfigError(f'detector features must be among {", ".join(FEATURES)}')
        if self.clones < 1 or self.bins < 2:
            raise ConfigError('at least one clone of m ≥ 2 bins')
        if self.min_support < 1:
            raise ConfigError('min_support ≥ 1')


@dataclasses.dataclass(frozen=True)
class ExtractionResult:
    itemsets: list[ItemSet]
    alarms: list[Alarm]
    values: dict[int, dict[Feature, set[int]]]      # alarmed interval → feature → identified values
    flagged: int                                    # flows handed to the item-set mining


def extract_pipeline(records: Sequence[FlowRecord], config: ExtractConfig = ExtractConfig(),
                     t0: Optional[float] = None) -> ExtractionResult:
    """Histogram detectors flag intervals and feature values; flows of the whole trace carrying
    any identified value are mined for frequent item-sets.

    Detectors alarm on the change into (and out of) an anomaly, so an anomaly lasting several
    intervals is only seen at its edges; matching over the whole trace recovers all its flows.
    """
    if not records:
        raise ContractError('records non-empty')
    if t0 is None:
        t0 = math.floor(min(r.t for r in records) / config.bin_width) * config.bin_width
    intervals = max(time_bin(r.t, t0, config.bin_width) for r in records) + 1
    seeds = clone_seeds(config.clones, config.seed)

    alarms: list[Alarm] = []
    values: dict[int, dict[Feature, set[int]]] = {}
    for feature in config.features:
        counts = clone_series(records, feature, config.bins, seeds, config.bin_width, t0, intervals)
        detection = kl_detect(counts, config.training_intervals, config.sigma_mult, config.smoothing)
        for t in detection.interval_alarms:
            t = int(t)
            observed = {r.feature(feature) for r in records if time_bin(r.t, t0, config.bin_width) == t}
            identified = interval_values(detection, counts, t, seeds, observed, config.smoothing)
            if identified:
                values.setdefault(t, {})[feature] = identified
            alarms.append(Alarm(
                t_index=t, detector=f'kl-{feature}', score=detection.score(t), threshold=config.sigma_mult,
                keys=tuple(f'{feature}={format_feature_value(feature, v)}' for v in sorted(identified)),
            ))
    alarms.sort(key=lambda a: (a.t_index, a.detector))

    meta: dict[Feature, set[int]] = {}
    for interval in values.values():
        for feature, identified in interval.items():
            meta.setdefault(feature, set()).update(identified)
    flagged = [r for r in records if any(r.feature(f) in v for f, v in meta.items())]
    itemsets = apriori(flagged, config.min_support) if flagged else []
    logger.info(f'Extraction: {len(alarms)} detector alarms over {len(values)} intervals, '
                f'{len(flagged)} flagged flows, {len(itemsets)} item-sets')
    return ExtractionResult(itemsets=itemsets, alarms=alarms, values=values, flagged=len(flagged))
