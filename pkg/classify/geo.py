"""Continent lookup for WAN endpoints"""

import csv
import logging
from typing import Dict, Iterable, List, Optional, Tuple

from utils.ipv4 import parse_cidr

from .errors import ParseError
from .prefix_trie import PrefixTrie

logger = logging.getLogger(__name__)

UNKNOWN = "Unknown"
CONTINENTS = ("Africa", "Asia", "Europe", "North America", "South America", "Oceania")
ALL_CONTINENTS = CONTINENTS + (UNKNOWN,)

_CANONICAL = {name.lower().replace(' ', ''): name for name in CONTINENTS}
_CANONICAL.update({'na': "North America", 'sa': "South America", 'af': "Africa",
                   'as': "Asia", 'eu': "Europe", 'oc': "Oceania"})


def normalize_continent(label: str) -> Optional[str]:
    """Canonical continent name for `label`, or None when unrecognized"""
    key = label.strip().lower().replace(' ', '').replace('_', '').replace('-', '')
    return _CANONICAL.get(key)


class GeoDb:
    """Longest-prefix-match map from IPv4 prefixes to continent labels"""

    def __init__(self, entries: Iterable[Tuple[str, str]] = ()):
        """
        Args:
            entries: (cidr text, continent label) pairs; later duplicates win
        """
        self.entries: List[Tuple[int, int, str]] = []
        self._index: PrefixTrie = PrefixTrie()
        for i, (cidr, label) in enumerate(entries, start=1):
            self._add("<entries>", i, cidr, label)

    def _add(self, source: str, line_no: int, cidr: str, label: str):
        try:
            net = parse_cidr(cidr)
        except ValueError as e:
            raise ParseError(source, line_no, f"bad CIDR {cidr!r}: {e}") from None
        continent = normalize_continent(label)
        if continent is None:
            raise ParseError(source, line_no, f"unknown continent {label!r}")
        network, plen = int(net.network_address), net.prefixlen
        if self._index.insert(network, plen, continent):
            logger.warning("%s:%d: duplicate prefix %s, keeping the later label %s",
                           source, line_no, cidr.strip(), continent)
            self.entries = [e for e in self.entries if e[:2] != (network, plen)]
        self.entries.append((network, plen, continent))

    def __len__(self) -> int:
        return len(self._index)

    def lookup(self, addr: int) -> str:
        label = self._index.lookup(addr)
        return label if label is not None else UNKNOWN


def load_geo_db(path: str) -> GeoDb:
    """
    Load a `cidr,continent` CSV (optional header row, `#` comments)

    Raises:
        ParseError: malformed row, bad CIDR or unknown continent
    """
    db = GeoDb()
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ParseError(str(path), 0, e.strerror or str(e)) from e

    for line_no, row in enumerate(rows, start=1):
        if not row or not row[0].strip() or row[0].lstrip().startswith('#'):
            continue
        if line_no == 1 and row[0].strip().lower() == 'cidr':
            continue
        if len(row) < 2:
            raise ParseError(str(path), line_no, "expected 'cidr,continent'")
        db._add(str(path), line_no, row[0], row[1])

    logger.info("Loaded %d geo prefixes from %s", len(db), path)
    return db


def lookup_continent(addr: Optional[int], db: Optional[GeoDb]) -> str:
    """Continent of `addr` by longest-prefix match; Unknown when nothing matches"""
    if addr is None or db is None:
        return UNKNOWN
    return db.lookup(addr)


def continent_counts() -> Dict[str, int]:
    """Zeroed counter over every continent label, in report order"""
    return {name: 0 for name in ALL_CONTINENTS}
