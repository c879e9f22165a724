"""
Synthetic flow traces with injectable anomalies, and link loads over a ring-with-chords topology.

Hosts live at 10.<node>.0.<host>, so the node of an address is its second octet. Background
traffic follows a daily cycle; every anomaly template concentrates or disperses the feature
distributions the way the corresponding real event does.
"""
import collections
import dataclasses
import logging
import math
from typing import Literal, Optional, Sequence, TypeAlias, get_args

import numpy as np

from netanomaly.core.records import FlowRecord, int_to_ip
from netanomaly.core.traffic import TrafficMatrix, bin_traffic
from netanomaly.errors import ConfigError, ContractError

logger = logging.getLogger(__name__)


AnomalyKind: TypeAlias = Literal['alpha', 'dos', 'ddos', 'flashcrowd', 'portscan', 'netscan', 'outage', 'p2mp', 'worm']
ANOMALY_KINDS: tuple[AnomalyKind, ...] = get_args(AnomalyKind)

SERVICE_PORTS = (80, 443, 53, 25, 22, 8080, 3306)
SERVICE_WEIGHTS = (0.35, 0.25, 0.1, 0.05, 0.05, 0.1, 0.1)
TCP, UDP = 6, 17
SECONDS_PER_DAY = 86_400


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    bins: int = 288
    bin_width: float = 300.0
    nodes: int = 10
    hosts_per_node: int = 50
    flows_per_bin: int = 200
    diurnal: float = 0.5        # relative amplitude of the daily cycle
    t0: float = 0.0

    def __post_init__(self):
        if self.bins < 1 or self.bin_width <= 0 or self.flows_per_bin < 1:
            raise ConfigError('bins ≥ 1, bin_width > 0 and flows_per_bin ≥ 1')
        if not 2 <= self.nodes <= 256 or not 1 <= self.hosts_per_node <= 254:
            raise ConfigError('2 ≤ nodes ≤ 256 and 1 ≤ hosts_per_node ≤ 254')
        if not 0 <= self.diurnal < 1:
            raise ConfigError('0 ≤ diurnal < 1')


@dataclasses.dataclass(frozen=True)
class AnomalySpec:
    kind: AnomalyKind
    start: int              # first bin
    duration: int = 12      # bins
    intensity: float = 1.0

    def __post_init__(self):
        if self.kind not in ANOMALY_KINDS:
            raise ConfigError(f'unknown anomaly {self.kind!r} (choose from {", ".join(ANOMALY_KINDS)})')
        if self.start < 0 or self.duration < 1 or self.intensity <= 0:
            raise ConfigError('start ≥ 0, duration ≥ 1 and intensity > 0')


@dataclasses.dataclass(frozen=True)
class InjectedAnomaly:
    """Ground truth of one injection; `keys` holds the fixed feature values of the template."""
    kind: AnomalyKind
    start: int
    duration: int
    flows: int
    keys: dict[str, str]


def host_address(node: int, host: int) -> int:
    return (10 << 24) | (node << 16) | (host + 1)


def node_of(address: int) -> int:
    return (address >> 16) & 0xff


class _Generator:
    def __init__(self, config: SynthConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        popularity = 1.0 / np.arange(1, config.hosts_per_node + 1)
        self.host_weights = popularity / popularity.sum()

    def hosts(self, count: int) -> np.ndarray:
        nodes = self.rng.integers(0, self.config.nodes, count)
        hosts = self.rng.choice(self.config.hosts_per_node, size=count, p=self.host_weights)
        return host_address(nodes, hosts)

    def host(self) -> int:
        return int(self.hosts(1)[0])

    def times(self, i: int, count: int) -> np.ndarray:
        start = self.config.t0 + i * self.config.bin_width
        return np.sort(start + self.rng.uniform(0.0, self.config.bin_width, count))

    def background(self) -> list[FlowRecord]:
        config = self.config
        phase = 2 * math.pi * config.bin_width / SECONDS_PER_DAY
        records = []
        for i in range(config.bins):
            rate = config.flows_per_bin * (1.0 + config.diurnal * math.sin(phase * i))
            count = int(self.rng.poisson(rate))
            sips, dips = self.hosts(count), self.hosts(count)
            service = self.rng.random(count) < 0.8
            dps = np.where(service, self.rng.choice(SERVICE_PORTS, size=count, p=SERVICE_WEIGHTS),
                           self.rng.integers(1024, 65536, count))
            packets = self.rng.geometric(0.1, count)
            sizes = self.rng.integers(40, 1501, count)
            for t, sip, dip, sp, dp, n, size in zip(self.times(i, count), sips, dips,
                                                    self.rng.integers(1024, 65536, count), dps, packets, sizes):
                records.append(FlowRecord(t=float(t), sip=int(sip), dip=int(dip), sp=int(sp), dp=int(dp),
                                          proto=UDP if dp == 53 else TCP, packets=int(n), bytes=int(n * size)))
        return records

    def flows(self, i: int, count: int, sip, dip, sp, dp, proto: int, packets, size) -> list[FlowRecord]:
        """`count` flows in bin i; every feature is a constant, an array or a callable drawing an array."""
        def draw(spec) -> np.ndarray:
            value = spec(count) if callable(spec) else spec
            return np.broadcast_to(np.asarray(value), (count,))
        columns = [draw(s) for s in (sip, dip, sp, dp, packets, size)]
        return [
            FlowRecord(t=float(t), sip=int(a), dip=int(b), sp=int(c), dp=int(d), proto=proto, packets=int(n),
                       bytes=int(n * s))
            for t, a, b, c, d, n, s in zip(self.times(i, count), *columns)
        ]

    def ephemeral(self, count: int) -> np.ndarray:
        return self.rng.integers(1024, 65536, count)

    def inject(self, spec: AnomalySpec, records: list[FlowRecord]) -> tuple[list[FlowRecord], InjectedAnomaly]:
        config = self.config
        bins = range(spec.start, min(spec.start + spec.duration, config.bins))
        scaled = lambda base: max(1, int(round(base * spec.intensity)))
        added: list[FlowRecord] = []
        keys: dict[str, str] = {}
        removed = 0
        match spec.kind:
            case 'alpha':
                sip, dip, sp, dp = self.host(), self.host(), int(self.ephemeral(1)[0]), 5001
                keys = {'sip': int_to_ip(sip), 'dip': int_to_ip(dip), 'dp': str(dp)}
                for i in bins:
                    added += self.flows(i, scaled(20), sip, dip, sp, dp, TCP,
                                        lambda n: self.rng.integers(1000, 5001, n), 1500)
            case 'dos':
                sip, dip = self.host(), self.host()
                keys = {'sip': int_to_ip(sip), 'dip': int_to_ip(dip), 'dp': '80'}
                for i in bins:
                    added += self.flows(i, scaled(1000), sip, dip, self.ephemeral, 80, TCP, 1, 46)
            case 'ddos':
                dip = self.host()
                keys = {'dip': int_to_ip(dip), 'dp': '80'}
                spoofed = lambda n: self.rng.integers(1 << 24, 224 << 24, n)
                for i in bins:
                    added += self.flows(i, scaled(1000), spoofed, dip, self.ephemeral, 80, TCP, 1, 46)
            case 'flashcrowd':
                dip = self.host()
                keys = {'dip': int_to_ip(dip), 'dp': '80'}
                for i in bins:
                    added += self.flows(i, scaled(600), self.hosts, dip, self.ephemeral, 80, TCP,
                                        lambda n: self.rng.geometric(0.1, n), 800)
            case 'portscan':
                sip, dip, sp = self.host(), self.host(), int(self.ephemeral(1)[0])
                keys = {'sip': int_to_ip(sip), 'dip': int_to_ip(dip)}
                for i in bins:
                    count = scaled(1000)
                    added += self.flows(i, count, sip, dip, sp, self.rng.permutation(65535)[:count] + 1, TCP, 1, 40)
            case 'netscan':
                sip, dp = self.host(), 445
                keys = {'sip': int_to_ip(sip), 'dp': str(dp)}
                sweep = lambda n: self.rng.integers(10 << 24, 11 << 24, n)
                for i in bins:
                    added += self.flows(i, scaled(1000), sip, sweep, self.ephemeral, dp, TCP, 1, 40)
            case 'worm':
                infected = self.hosts(5)
                keys = {'dp': '1434', 'sip': ' '.join(int_to_ip(int(a)) for a in infected)}
                sweep = lambda n: self.rng.integers(10 << 24, 11 << 24, n)
                for i in bins:
                    added += self.flows(i, scaled(1000), lambda n: self.rng.choice(infected, n), sweep,
                                        self.ephemeral, 1434, UDP, 1, 404)
            case 'p2mp':
                sip = self.host()
                keys = {'sip': int_to_ip(sip), 'sp': '80'}
                for i in bins:
                    added += self.flows(i, scaled(600), sip, self.hosts, 80, self.ephemeral, TCP,
                                        lambda n: self.rng.integers(100, 1001, n), 1500)
            case 'outage':
                node = int(self.rng.integers(0, config.nodes))
                keys = {'dip': f'10.{node}.0.0/16'}
                first = config.t0 + spec.start * config.bin_width
                last = first + spec.duration * config.bin_width
                kept = [r for r in records if not (first <= r.t < last and node_of(r.dip) == node)]
                removed = len(records) - len(kept)
                records = kept
            case _:
                raise ConfigError(f'unknown anomaly {spec.kind!r}')
        logger.info(f'Injected {spec.kind} at bins {spec.start}-{spec.start + spec.duration - 1}: {keys}')
        flows = removed if spec.kind == 'outage' else len(added)
        return records + added, InjectedAnomaly(kind=spec.kind, start=spec.start, duration=spec.duration,
                                                flows=flows, keys=keys)


def synth_flows(config: SynthConfig = SynthConfig(), anomalies: Sequence[AnomalySpec] = (),
                seed: int = 0) -> tuple[list[FlowRecord], list[InjectedAnomaly]]:
    """Background traffic plus the requested anomalies, ordered by time."""
    generator = _Generator(config, np.random.default_rng(seed))
    records = generator.background()
    truth = []
    for spec in anomalies:
        if spec.start >= config.bins:
            raise ConfigError(f'anomaly start {spec.start} lies beyond the last bin {config.bins - 1}')
        records, injected = generator.inject(spec, records)
        truth.append(injected)
    records.sort(key=lambda r: r.t)
    logger.info(f'Synthesized {len(records)} flows over {config.bins} bins')
    return records, truth


def ring_with_chords(nodes: int, chords: int = 0) -> list[tuple[int, int]]:
    """Directed links of a bidirectional ring plus `chords` bidirectional diameters from nodes 0, 1, ..."""
    if nodes < 3:
        raise ContractError('a ring needs at least 3 nodes')
    if not 0 <= chords <= nodes // 2:
        raise ContractError(f'0 ≤ chords ≤ {nodes // 2}')
    edges = [(i, (i + 1) % nodes) for i in range(nodes)]
    edges += [(i, i + nodes // 2) for i in range(chords) if nodes // 2 > 1]
    links = []
    for a, b in edges:
        links += [(a, b), (b, a)]
    return links


def shortest_path(links: Sequence[tuple[int, int]], source: int, target: int) -> list[int]:
    """Link indices of the breadth-first shortest path; ties go to the lower-numbered neighbour."""
    adjacency: dict[int, list[tuple[int, int]]] = collections.defaultdict(list)
    for index, (a, b) in enumerate(links):
        adjacency[a].append((b, index))
    for neighbours in adjacency.values():
        neighbours.sort()
    previous: dict[int, tuple[int, int]] = {}
    queue = collections.deque([source])
    seen = {source}
    while queue:
        node = queue.popleft()
        if node == target:
            break
        for neighbour, index in adjacency[node]:
            if neighbour not in seen:
                seen.add(neighbour)
                previous[neighbour] = (node, index)
                queue.append(neighbour)
    if target not in seen:
        raise ContractError(f'node {target} is unreachable from node {source}')
    path = []
    node = target
    while node != source:
        node, index = previous[node]
        path.append(index)
    return path[::-1]


def od_pairs(nodes: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(nodes) for b in range(nodes) if a != b]


def routing_matrix(links: Sequence[tuple[int, int]], pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """A(l, f) = 1 iff OD flow f is routed over link l."""
    A = np.zeros((len(links), len(pairs)))
    for f, (a, b) in enumerate(pairs):
        A[shortest_path(links, a, b), f] = 1.0
    return A


def synth_links(records: Sequence[FlowRecord], config: SynthConfig = SynthConfig(),
                chords: int = 0, pairs: Optional[Sequence[tuple[int, int]]] = None
                ) -> tuple[TrafficMatrix, np.ndarray, TrafficMatrix]:
    """Link loads Y = A X of the OD byte counts X; returns (links, A, OD matrix).

    Link ids are the link indices, so the natural order of the link CSV matches the rows of A.
    """
    links = ring_with_chords(config.nodes, chords)
    pairs = list(pairs) if pairs is not None else od_pairs(config.nodes)
    column = {pair: f for f, pair in enumerate(pairs)}
    local = [r for r in records if (node_of(r.sip), node_of(r.dip)) in column]
    od = bin_traffic(local, config.bin_width, key=lambda r: (node_of(r.sip), node_of(r.dip)),
                     t0=config.t0, n_bins=config.bins)
    X = np.zeros((config.bins, len(pairs)))
    for j, pair in enumerate(od.series_ids):
        if pair in column:
            X[:, column[pair]] = od.values[:, j]
    A = routing_matrix(links, pairs)
    Y = TrafficMatrix(values=X @ A.T, bin_width=config.bin_width,
                      series_ids=tuple(str(i) for i in range(len(links))), t0=config.t0)
    flows = TrafficMatrix(values=X, bin_width=config.bin_width,
                          series_ids=tuple(f'{a}-{b}' for a, b in pairs), t0=config.t0)
    logger.info(f'Routed {len(pairs)} OD flows over {len(links)} links')
    return Y, A, flows
