"""
Flow records and their CSV representation.

Addresses are kept as 32-bit integers; the dotted-quad form only exists at the I/O boundary.
"""
import csv
import dataclasses
import ipaddress
import logging
import math
from typing import Iterable, Iterator, Literal, TextIO, TypeAlias, get_args

from netanomaly.errors import ParseError

logger = logging.getLogger(__name__)


Feature: TypeAlias = Literal['sip', 'dip', 'sp', 'dp', 'proto', 'packets', 'bytes']
FEATURES: tuple[Feature, ...] = get_args(Feature)

FLOW_CSV_HEADER = ('t', 'sip', 'dip', 'sp', 'dp', 'proto', 'packets', 'bytes')


@dataclasses.dataclass(frozen=True, slots=True)
class FlowRecord:
    t: float
    sip: int
    dip: int
    sp: int
    dp: int
    proto: int
    packets: int
    bytes: int

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f'timestamp must be finite, got {self.t}')
        for name, bits in (('sip', 32), ('dip', 32), ('sp', 16), ('dp', 16), ('proto', 8)):
            value = getattr(self, name)
            if not 0 <= value < 2 ** bits:
                raise ValueError(f'{name}={value} does not fit into {bits} bits')
        if self.packets < 1:
            raise ValueError(f'a flow has at least one packet, got {self.packets}')
        if self.bytes < self.packets:
            raise ValueError(f'{self.bytes} bytes cannot fill {self.packets} packets')

    def feature(self, feature: Feature) -> int:
        return getattr(self, feature)

    def five_tuple(self) -> tuple[int, int, int, int, int]:
        return self.sip, self.dip, self.sp, self.dp, self.proto


def ip_to_int(address: str) -> int:
    return int(ipaddress.IPv4Address(address))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


def format_feature_value(feature: Feature, value: int) -> str:
    if feature in ('sip', 'dip'):
        return int_to_ip(value)
    return str(value)


def csv_rows(stream: TextIO | Iterable[str]) -> Iterator[list[str]]:
    """CSV rows; malformed input raises ParseError with the physical line number."""
    reader = csv.reader(stream)
    try:
        yield from reader
    except csv.Error as e:
        raise ParseError(str(e), reader.line_num) from e


def parse_flow_records(stream: TextIO | Iterable[str]) -> list[FlowRecord]:
    """Parse the flow CSV format (`t,sip,dip,sp,dp,proto,packets,bytes`, header required)."""
    records: list[FlowRecord] = []
    reader = csv_rows(stream)
    header = next(reader, None)
    if header is None:
        return records
    if tuple(field.strip() for field in header) != FLOW_CSV_HEADER:
        raise ParseError(f'expected header {",".join(FLOW_CSV_HEADER)}', line_number=1)
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(FLOW_CSV_HEADER):
            raise ParseError(f'expected {len(FLOW_CSV_HEADER)} fields, found {len(row)}', line_number)
        try:
            records.append(FlowRecord(
                t=float(row[0]),
                sip=ip_to_int(row[1].strip()),
                dip=ip_to_int(row[2].strip()),
                sp=int(row[3]),
                dp=int(row[4]),
                proto=int(row[5]),
                packets=int(row[6]),
                bytes=int(row[7]),
            ))
        except ValueError as e:
            raise ParseError(str(e), line_number) from e
    logger.info(f'Parsed {len(records)} flow records')
    return records


def write_flow_records(records: Iterable[FlowRecord], out: TextIO):
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(FLOW_CSV_HEADER)
    for r in records:
        writer.writerow((
            repr(r.t), int_to_ip(r.sip), int_to_ip(r.dip), r.sp, r.dp, r.proto, r.packets, r.bytes
        ))
