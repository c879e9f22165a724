"""
Level-wise frequent item-set mining over flow records.

Every flow is a transaction of seven items, one (feature, value) pair per flow feature. Only
the most specific frequent item-sets are reported: an i-item-set is suppressed as soon as it is
contained in a frequent (i+1)-item-set.
"""
import dataclasses
import itertools
import logging
from typing import Iterable, Sequence, TextIO

from netanomaly.core.records import FEATURES, Feature, FlowRecord, format_feature_value
from netanomaly.errors import ContractError
from netanomaly.utils.logs import timelogger

logger = logging.getLogger(__name__)


Item = tuple[Feature, int]
MAX_ITEMS = len(FEATURES)


def _item_order(item: Item) -> tuple[int, int]:
    return FEATURES.index(item[0]), item[1]


@dataclasses.dataclass(frozen=True)
class ItemSet:
    items: tuple[Item, ...]
    support: int

    def __post_init__(self):
        features = [f for f, _ in self.items]
        if len(set(features)) != len(features):
            raise ContractError('the features of an item-set must be distinct')
        if not 1 <= len(self.items) <= MAX_ITEMS:
            raise ContractError(f'an item-set holds 1 to {MAX_ITEMS} items')
        if self.support < 0:
            raise ContractError('support ≥ 0')
        object.__setattr__(self, 'items', tuple(sorted(self.items, key=_item_order)))

    @property
    def k(self) -> int:
        return len(self.items)

    def matches(self, record: FlowRecord) -> bool:
        return all(record.feature(f) == v for f, v in self.items)

    def format(self) -> str:
        items = ','.join(f'{f}={format_feature_value(f, v)}' for f, v in self.items)
        return f'{self.k}  {items}  {self.support}'


def transaction(record: FlowRecord) -> frozenset[Item]:
    return frozenset((f, record.feature(f)) for f in FEATURES)


def _support(candidate: frozenset[Item], transactions: Sequence[frozenset[Item]]) -> int:
    return sum(1 for t in transactions if candidate <= t)


def _all_subsets_frequent(candidate: frozenset[Item], frequent: set[frozenset[Item]]) -> bool:
    return all(candidate - {item} in frequent for item in candidate)


def frequent_itemsets(transactions: Sequence[frozenset[Item]], min_support: int) -> dict[frozenset[Item], int]:
    """All frequent item-sets with their exact supports."""
    if min_support < 1:
        raise ContractError('min_support ≥ 1')
    counts: dict[frozenset[Item], int] = {}
    for t in transactions:
        for item in t:
            key = frozenset((item,))
            counts[key] = counts.get(key, 0) + 1
    level = {s: c for s, c in counts.items() if c >= min_support}
    result = dict(level)
    size = 1
    while level:
        candidates = set()
        for a, b in itertools.combinations(level, 2):
            union = a | b
            if len(union) != size + 1 or len({f for f, _ in union}) != size + 1:
                continue
            if _all_subsets_frequent(union, set(level)):
                candidates.add(union)
        level = {}
        for candidate in candidates:
            support = _support(candidate, transactions)
            if support >= min_support:
                level[candidate] = support
        logger.debug(f'Apriori: {len(level)} frequent {size + 1}-item-sets')
        result.update(level)
        size += 1
    return result


def apriori(records: Iterable[FlowRecord] | Iterable[frozenset[Item]], min_support: int) -> list[ItemSet]:
    """Most specific frequent item-sets, ordered by size and then by support (descending)."""
    transactions = [r if isinstance(r, frozenset) else transaction(r) for r in records]
    with timelogger(logger, f'Apriori over {len(transactions)} transactions'):
        frequent = frequent_itemsets(transactions, min_support)
    maximal = [
        s for s in frequent
        if not any(len(other) == len(s) + 1 and s < other for other in frequent)
    ]
    itemsets = [ItemSet(items=tuple(s), support=frequent[s]) for s in maximal]
    itemsets.sort(key=lambda s: (s.k, -s.support, [_item_order(i) for i in s.items]))
    return itemsets


def write_itemsets(itemsets: Iterable[ItemSet], out: TextIO):
    for itemset in itemsets:
        out.write(itemset.format() + '\n')
