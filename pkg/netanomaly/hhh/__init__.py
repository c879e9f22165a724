from netanomaly.hhh.trie import (
    HhhConfig, PrefixTrie, TrieNode, detect_hhh, finalize, format_prefix, hhh1d, trie_update,
)
from netanomaly.hhh.grid import Grid2D, hhh2d

__all__ = [
    'HhhConfig', 'PrefixTrie', 'TrieNode', 'detect_hhh', 'finalize', 'format_prefix', 'hhh1d', 'trie_update',
    'Grid2D', 'hhh2d',
]
