"""
Two-dimensional (source, destination) heavy hitters by cross-producting: one trie per
dimension supplies the longest matching prefixes, and a W × W array of hash tables indexed by
the two prefix lengths holds the volume of every prefix pair.
"""
import logging
from collections import defaultdict
from typing import Iterable, Sequence

from netanomaly.core.records import FlowRecord
from netanomaly.errors import ContractError
from netanomaly.hhh.trie import (
    HhhConfig, MissRule, MISS_RULES, Prefix, PrefixTrie, detect_hhh, leading_bits,
)

logger = logging.getLogger(__name__)


PrefixPair = tuple[Prefix, Prefix]


class Grid2D:
    def __init__(self, W: int, T_s: float):
        self.W = W
        self.source = PrefixTrie(W, T_s)
        self.destination = PrefixTrie(W, T_s)
        # (l1, l2) → {(p1, p2): volume}
        self.tables: dict[tuple[int, int], dict[tuple[int, int], float]] = defaultdict(lambda: defaultdict(float))

    def update(self, src: int, dst: int, value: float):
        l1 = self.source.update(src, value)
        l2 = self.destination.update(dst, value)
        self.tables[(l1, l2)][(src >> (self.W - l1), dst >> (self.W - l2))] += value

    def reconstruct(self) -> dict[tuple[int, int], dict[tuple[int, int], float]]:
        """Volumes of all prefix pairs: every entry is added to its ancestors in two passes.

        The first pass moves volume to the source parent, longest source prefixes first; the
        second does the same for the destination.
        """
        tables: dict[tuple[int, int], dict[tuple[int, int], float]] = defaultdict(lambda: defaultdict(float))
        for lengths, entries in self.tables.items():
            tables[lengths].update(entries)
        for l1 in range(self.W, 0, -1):
            for (a, l2) in [lengths for lengths in list(tables) if lengths[0] == l1]:
                for (p1, p2), volume in list(tables[(a, l2)].items()):
                    tables[(l1 - 1, l2)][(p1 >> 1, p2)] += volume
        for l2 in range(self.W, 0, -1):
            for (l1, b) in [lengths for lengths in list(tables) if lengths[1] == l2]:
                for (p1, p2), volume in list(tables[(l1, b)].items()):
                    tables[(l1, l2 - 1)][(p1, p2 >> 1)] += volume
        return tables

    def finalize(self, rule: MissRule = 'copy_all') -> dict[PrefixPair, float]:
        """Reconstructed volume plus the larger of the two one-dimensional missed-traffic estimates."""
        if rule not in MISS_RULES:
            raise ContractError(f'unknown missed-traffic rule {rule!r}')
        self.source.finalize(rule)
        self.destination.finalize(rule)
        estimates = {}
        for (l1, l2), entries in self.reconstruct().items():
            for (p1, p2), volume in entries.items():
                src_node = self.source.node((p1, l1))
                dst_node = self.destination.node((p2, l2))
                missed = max(
                    src_node.missed(rule) if src_node is not None else 0.0,
                    dst_node.missed(rule) if dst_node is not None else 0.0,
                )
                estimates[((p1, l1), (p2, l2))] = volume + missed
        return estimates


def hhh2d(
        records: Sequence[FlowRecord] | Iterable[tuple[int, int, float]],
        config: HhhConfig,
        rule: MissRule = 'copy_all',
) -> tuple[dict[PrefixPair, float], set[PrefixPair]]:
    """Pair-prefix estimates and the pairs whose estimate reaches φS.

    Records are keyed on the leading W bits of their addresses and weighted by bytes; plain
    (src, dst, value) triples are taken as they are.
    """
    items = [
        (leading_bits(item.sip, config.W), leading_bits(item.dip, config.W), float(item.bytes))
        if isinstance(item, FlowRecord) else item
        for item in records
    ]
    total = sum(value for _, _, value in items)
    grid = Grid2D(config.W, config.split_threshold(total))
    for src, dst, value in items:
        grid.update(src, dst, value)
    estimates = grid.finalize(rule)
    heavy = detect_hhh(estimates, config.phi, total)
    logger.info(f'{len(heavy)} heavy prefix pairs among {len(estimates)} (rule {rule})')
    return estimates, heavy
