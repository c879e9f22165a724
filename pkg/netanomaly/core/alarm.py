import dataclasses
from typing import BinaryIO, Iterable

import orjson

from netanomaly.errors import ContractError


@dataclasses.dataclass(frozen=True)
class Alarm:
    """Uniform detector output, one JSON object per line on the wire."""
    t_index: int
    detector: str
    score: float
    threshold: float
    keys: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.score >= self.threshold:
            raise ContractError(f'an alarm needs score ≥ threshold ({self.score} < {self.threshold})')
        # numpy scalars would not serialize
        object.__setattr__(self, 't_index', int(self.t_index))
        object.__setattr__(self, 'score', float(self.score))
        object.__setattr__(self, 'threshold', float(self.threshold))
        object.__setattr__(self, 'keys', tuple(str(k) for k in self.keys))

    def to_json(self) -> bytes:
        return orjson.dumps(self)


def write_alarms(alarms: Iterable[Alarm], out: BinaryIO) -> int:
    count = 0
    for alarm in alarms:
        out.write(alarm.to_json() + b'\n')
        count += 1
    return count


def read_alarms(data: bytes) -> list[Alarm]:
    alarms = []
    for line in data.splitlines():
        if line.strip():
            obj = orjson.loads(line)
            alarms.append(Alarm(**{**obj, 'keys': tuple(obj['keys'])}))
    return alarms
