"""Binary trie over IPv4 prefixes with longest-prefix-match lookup"""

from typing import Generic, List, Optional, Tuple, TypeVar

V = TypeVar('V')


class _Node:
    __slots__ = ('children', 'value', 'terminal')

    def __init__(self):
        self.children: List[Optional['_Node']] = [None, None]
        self.value = None
        self.terminal = False


class PrefixTrie(Generic[V]):
    """Maps (network, prefix length) to a value; lookups return the longest match"""

    def __init__(self):
        self.root = _Node()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def insert(self, network: int, prefix_len: int, value: V) -> bool:
        """
        Store `value` under network/prefix_len

        Returns:
            True if the prefix was already present (its value is replaced)
        """
        node = self.root
        for bit in range(prefix_len):
            b = (network >> (31 - bit)) & 1
            if node.children[b] is None:
                node.children[b] = _Node()
            node = node.children[b]
        existed = node.terminal
        node.value = value
        node.terminal = True
        if not existed:
            self._size += 1
        return existed

    def lookup_len(self, addr: int) -> Tuple[int, Optional[V]]:
        """(matched prefix length, value) of the longest match, or (-1, None)"""
        node = self.root
        best_len, best = (0, node.value) if node.terminal else (-1, None)
        for bit in range(32):
            node = node.children[(addr >> (31 - bit)) & 1]
            if node is None:
                break
            if node.terminal:
                best_len, best = bit + 1, node.value
        return best_len, best

    def lookup(self, addr: int) -> Optional[V]:
        return self.lookup_len(addr)[1]

    def __contains__(self, addr: int) -> bool:
        return self.lookup_len(addr)[0] >= 0
