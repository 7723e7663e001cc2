"""Sequence-number arithmetic and byte-range bookkeeping"""

from bisect import bisect_left, bisect_right
from typing import Iterator, List, Tuple

SEQ_MOD = 1 << 32
SEQ_HALF = 1 << 31


def seq_diff(a: int, b: int) -> int:
    """Signed distance a - b in modular 32-bit sequence space"""
    d = (a - b) % SEQ_MOD
    return d - SEQ_MOD if d >= SEQ_HALF else d


def seq_lt(a: int, b: int) -> bool:
    return seq_diff(a, b) < 0


def unwrap(raw: int, base: int, reference: int) -> int:
    """
    Absolute offset of raw sequence `raw` in a stream starting at `base`

    The offset is chosen within 2**31 of `reference`, the highest offset
    seen so far, so streams longer than 4 GiB keep increasing.
    """
    rel = (raw - base) % SEQ_MOD
    return reference + seq_diff(rel, reference % SEQ_MOD)


class RangeSet:
    """Sorted, merged set of half-open integer ranges"""

    def __init__(self):
        self._starts: List[int] = []
        self._ends: List[int] = []

    def __len__(self) -> int:
        return len(self._starts)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(zip(self._starts, self._ends))

    def __bool__(self) -> bool:
        return bool(self._starts)

    def add(self, start: int, end: int):
        if end <= start:
            return
        lo = bisect_left(self._ends, start)
        hi = bisect_right(self._starts, end)
        if lo < hi:
            start = min(start, self._starts[lo])
            end = max(end, self._ends[hi - 1])
        self._starts[lo:hi] = [start]
        self._ends[lo:hi] = [end]

    def intersects(self, start: int, end: int) -> bool:
        if end <= start:
            return False
        i = bisect_right(self._starts, start) - 1
        if i >= 0 and self._ends[i] > start:
            return True
        return i + 1 < len(self._starts) and self._starts[i + 1] < end

    def covers(self, start: int, end: int) -> bool:
        i = bisect_right(self._starts, start) - 1
        return i >= 0 and self._ends[i] >= end

    def contains(self, value: int) -> bool:
        return self.covers(value, value + 1)

    def total(self) -> int:
        return sum(e - s for s, e in zip(self._starts, self._ends))
