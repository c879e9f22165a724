"""
One-dimensional hierarchical heavy hitters over a 1-bit prefix trie.

The trie starts as the single root node (the zero-length prefix). A fringe node absorbs
traffic until its volume would reach the split threshold T_s; it then becomes internal and
every later packet descends to the child matching the next key bit. Traffic absorbed by a
node before one of its descendants existed is invisible to that descendant; the missed
traffic rules estimate it when the trie is finalized.
"""
import dataclasses
import logging
from typing import Hashable, Iterable, Iterator, Literal, Mapping, Optional, TypeAlias, TypeVar

from netanomaly.core.records import int_to_ip
from netanomaly.errors import ConfigError, ContractError

logger = logging.getLogger(__name__)


MissRule: TypeAlias = Literal['copy_all', 'no_copy', 'splitting']
MISS_RULES: tuple[MissRule, ...] = ('copy_all', 'no_copy', 'splitting')

# (leading bits of the key, prefix length)
Prefix: TypeAlias = tuple[int, int]

K = TypeVar('K', bound=Hashable)


@dataclasses.dataclass(frozen=True)
class HhhConfig:
    phi: float = 0.05
    epsilon: float = 0.01
    W: int = 32
    T_s: Optional[float] = None     # None: ε·S/W from the (estimated) interval total S

    def __post_init__(self):
        if not 0.0 < self.phi <= 1.0:
            raise ConfigError(f'φ must lie in (0, 1], got {self.phi}')
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f'ε must lie in (0, 1], got {self.epsilon}')
        if not 1 <= self.W <= 32:
            raise ConfigError(f'key width must lie in [1, 32], got {self.W}')
        if self.T_s is not None and self.T_s <= 0:
            raise ConfigError('T_s > 0')

    def split_threshold(self, total: float) -> float:
        if self.T_s is not None:
            return self.T_s
        if total <= 0:
            raise ContractError('the interval total S must be positive to derive T_s')
        return self.epsilon * total / self.W


class TrieNode:
    __slots__ = 'children', 'depth', 'fringe', 'volume', 'subtotal', 'miss_copy', 'miss_split'

    def __init__(self, depth: int):
        self.children: list[Optional['TrieNode']] = [None, None]
        self.depth = depth
        self.fringe = True
        self.volume = 0.0
        self.subtotal = 0.0
        self.miss_copy = 0.0
        self.miss_split = 0.0

    def traffic(self) -> float:
        """Volume seen by this node and its subtrie (valid after reconstruction)."""
        return self.volume + self.subtotal

    def missed(self, rule: MissRule) -> float:
        match rule:
            case 'copy_all':
                return self.miss_copy
            case 'splitting':
                return self.miss_split
            case _:
                return 0.0


class PrefixTrie:
    def __init__(self, W: int, T_s: float):
        if T_s <= 0:
            raise ContractError('T_s > 0')
        self.W = W
        self.T_s = T_s
        self.root = TrieNode(0)
        self.total = 0.0

    def update(self, key: int, value: float) -> int:
        """Charge `value` to the longest matching node; returns the length of the prefix charged.

        At most one node is created per update.
        """
        if value > self.T_s:
            raise ContractError(f'packet size {value} exceeds the split threshold T_s={self.T_s:g}')
        if not 0 <= key < 2 ** self.W:
            raise ContractError(f'key must satisfy 0 ≤ key < 2^{self.W}')
        self.total += value
        node = self.root
        while True:
            if node.fringe:
                if node.volume + value < self.T_s:
                    node.volume += value
                    return node.depth
                node.fringe = False
                if node.depth == self.W:
                    node.subtotal += value
                    return node.depth
            elif node.depth == self.W:
                node.subtotal += value
                return node.depth
            bit = (key >> (self.W - node.depth - 1)) & 1
            child = node.children[bit]
            if child is None:
                # a new fringe node takes the whole value, even one equal to T_s
                child = TrieNode(node.depth + 1)
                child.volume = value
                node.children[bit] = child
                return child.depth
            node = child

    def longest_match(self, key: int) -> tuple[Prefix, TrieNode]:
        node = self.root
        while node.depth < self.W:
            child = node.children[(key >> (self.W - node.depth - 1)) & 1]
            if child is None:
                break
            node = child
        return (key >> (self.W - node.depth), node.depth), node

    def node(self, prefix: Prefix) -> Optional[TrieNode]:
        bits, length = prefix
        node: Optional[TrieNode] = self.root
        for depth in range(length):
            if node is None:
                return None
            node = node.children[(bits >> (length - depth - 1)) & 1]
        return node

    def walk(self) -> Iterator[tuple[Prefix, TrieNode]]:
        """Pre-order traversal (parents before children)."""
        stack: list[tuple[Prefix, TrieNode]] = [((0, 0), self.root)]
        while stack:
            (bits, length), node = stack.pop()
            yield (bits, length), node
            for bit in (1, 0):
                child = node.children[bit]
                if child is not None:
                    stack.append((((bits << 1) | bit, length + 1), child))

    def internal_nodes_per_depth(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for _, node in self.walk():
            if not node.fringe:
                counts[node.depth] = counts.get(node.depth, 0) + 1
        return counts

    def finalize(self, rule: MissRule = 'copy_all') -> dict[Prefix, float]:
        """Reconstruct subtrie volumes, estimate missed traffic and return per-prefix estimates.

        Reconstruction only rewrites the subtotals of nodes above depth W, so it can be repeated.
        """
        if rule not in MISS_RULES:
            raise ContractError(f'unknown missed-traffic rule {rule!r}')
        nodes = list(self.walk())
        for _, node in reversed(nodes):
            if node.depth < self.W:
                node.subtotal = sum(child.traffic() for child in node.children if child is not None)

        self.root.miss_copy = 0.0
        self.root.miss_split = 0.0
        for _, node in nodes:
            children = [child for child in node.children if child is not None]
            inherited = node.miss_split + node.volume
            children_traffic = sum(child.traffic() for child in children)
            for child in children:
                child.miss_copy = node.miss_copy + node.volume
                child.miss_split = (inherited * child.traffic() / children_traffic
                                    if children_traffic > 0 else 0.0)

        bound = self.T_s * self.W
        logger.debug(f'Trie finalized: S={self.total:g}, missed traffic per prefix ≤ {bound:g}')
        return {prefix: node.traffic() + node.missed(rule) for prefix, node in nodes}


def trie_update(trie: PrefixTrie, key: int, value: float) -> int:
    return trie.update(key, value)


def finalize(trie: PrefixTrie, rule: MissRule = 'copy_all') -> dict[Prefix, float]:
    return trie.finalize(rule)


def detect_hhh(estimates: Mapping[K, float], phi: float, S: float) -> set[K]:
    """Prefixes whose estimated volume reaches φS."""
    if S <= 0:
        raise ContractError('S > 0')
    return {prefix for prefix, estimate in estimates.items() if estimate >= phi * S}


def format_prefix(prefix: Prefix) -> str:
    bits, length = prefix
    return f'{int_to_ip(bits << (32 - length))}/{length}'


def leading_bits(address: int, W: int) -> int:
    return address >> (32 - W)


def hhh1d(keyed_values: Iterable[tuple[int, float]], config: HhhConfig,
          rule: MissRule = 'copy_all') -> tuple[dict[Prefix, float], set[Prefix]]:
    """Build the trie for one interval and report its heavy prefixes.

    With T_s left open the interval total is known up front, so T_s = ε·S/W.
    """
    items = list(keyed_values)
    total = sum(value for _, value in items)
    trie = PrefixTrie(config.W, config.split_threshold(total))
    for key, value in items:
        trie.update(key, value)
    estimates = trie.finalize(rule)
    heavy = detect_hhh(estimates, config.phi, total)
    logger.info(f'{len(heavy)} heavy prefixes among {len(estimates)} trie nodes (rule {rule})')
    return estimates, heavy
