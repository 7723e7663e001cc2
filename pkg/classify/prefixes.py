"""LAN/MAN prefix configuration and scope classification"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Tuple

from capture.records import PacketRecord
from utils.ipv4 import int_to_ip, parse_cidr

from .errors import OverlapError, ParseError
from .prefix_trie import PrefixTrie

logger = logging.getLogger(__name__)

Cidr = Tuple[int, int]  # (network, prefix length)

LINE_PATTERN = re.compile(r'^(?P<kind>lan|man)\s+(?P<cidr>\S+)$', re.IGNORECASE)


class Scope(Enum):
    """Where a packet travels relative to the monitored network"""
    LAN = "LAN"
    MAN = "MAN"
    WAN = "WAN"


def _overlaps(a: Cidr, b: Cidr) -> bool:
    shorter = min(a[1], b[1])
    if shorter == 0:
        return True
    shift = 32 - shorter
    return (a[0] >> shift) == (b[0] >> shift)


@dataclass
class PrefixConfig:
    """
    Monitored intranet (LAN) and island (MAN) prefixes

    Lists are validated on construction: LAN non-empty, no LAN/MAN overlap.
    Immutable after load by convention.
    """
    lan_prefixes: List[Cidr]
    man_prefixes: List[Cidr] = field(default_factory=list)

    def __post_init__(self):
        if not self.lan_prefixes:
            raise ParseError("<prefixes>", 0, "at least one LAN prefix is required")
        for lan in self.lan_prefixes:
            for man in self.man_prefixes:
                if _overlaps(lan, man):
                    raise OverlapError(f"LAN prefix {_fmt(lan)} overlaps MAN prefix {_fmt(man)}")
        self._lan = PrefixTrie()
        for net, plen in self.lan_prefixes:
            self._lan.insert(net, plen, True)
        self._man = PrefixTrie()
        for net, plen in self.man_prefixes:
            self._man.insert(net, plen, True)

    @classmethod
    def from_strings(cls, lan: Iterable[str], man: Iterable[str] = ()) -> 'PrefixConfig':
        """Build from CIDR text, e.g. PrefixConfig.from_strings(['10.0.0.0/16'])"""
        return cls(_parse_list(lan, 'lan'), _parse_list(man, 'man'))

    def is_lan(self, addr: int) -> bool:
        return addr in self._lan

    def is_man(self, addr: int) -> bool:
        return addr in self._man


def _fmt(cidr: Cidr) -> str:
    return f"{int_to_ip(cidr[0])}/{cidr[1]}"


def _to_cidr(text: str) -> Cidr:
    net = parse_cidr(text)
    return int(net.network_address), net.prefixlen


def _parse_list(items: Iterable[str], kind: str) -> List[Cidr]:
    result: List[Cidr] = []
    for i, text in enumerate(items, start=1):
        try:
            cidr = _to_cidr(text)
        except ValueError as e:
            raise ParseError(f"<{kind}>", i, f"bad CIDR {text!r}: {e}") from None
        if cidr in result:
            raise ParseError(f"<{kind}>", i, f"duplicate prefix {text}")
        result.append(cidr)
    return result


def load_prefix_config(path: str) -> PrefixConfig:
    """
    Load a prefix file of `lan <cidr>` / `man <cidr>` lines

    Raises:
        ParseError: unreadable line, bad or duplicate CIDR, no LAN prefix
        OverlapError: a LAN prefix overlaps a MAN prefix
    """
    lan: List[Cidr] = []
    man: List[Cidr] = []
    seen = set()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise ParseError(str(path), 0, e.strerror or str(e)) from e

    for line_no, line in enumerate(lines, start=1):
        text = line.split('#', 1)[0].strip()
        if not text:
            continue
        match = LINE_PATTERN.match(text)
        if not match:
            raise ParseError(str(path), line_no, f"expected 'lan <cidr>' or 'man <cidr>', got {text!r}")
        try:
            cidr = _to_cidr(match.group('cidr'))
        except ValueError as e:
            raise ParseError(str(path), line_no, f"bad CIDR: {e}") from None
        if cidr in seen:
            raise ParseError(str(path), line_no, f"duplicate prefix {match.group('cidr')}")
        seen.add(cidr)
        (lan if match.group('kind').lower() == 'lan' else man).append(cidr)

    if not lan:
        raise ParseError(str(path), len(lines), "no LAN prefix configured")
    cfg = PrefixConfig(lan, man)
    logger.info("Loaded %d LAN and %d MAN prefixes from %s", len(lan), len(man), path)
    return cfg


def classify_scope(pkt: PacketRecord, cfg: PrefixConfig) -> Scope:
    """
    LAN when both endpoints are local, MAN/WAN by the remote endpoint otherwise

    Packets with no local endpoint are judged by their destination.
    """
    src_lan = cfg.is_lan(pkt.src_addr)
    dst_lan = cfg.is_lan(pkt.dst_addr)
    if src_lan and dst_lan:
        return Scope.LAN
    remote = remote_address(pkt, cfg)
    return Scope.MAN if cfg.is_man(remote) else Scope.WAN


def is_foreign(pkt: PacketRecord, cfg: PrefixConfig) -> bool:
    """Neither endpoint belongs to the LAN"""
    return not cfg.is_lan(pkt.src_addr) and not cfg.is_lan(pkt.dst_addr)


def remote_address(pkt: PacketRecord, cfg: PrefixConfig) -> Optional[int]:
    """The non-LAN endpoint (destination for foreign packets, None for LAN-only traffic)"""
    src_lan = cfg.is_lan(pkt.src_addr)
    dst_lan = cfg.is_lan(pkt.dst_addr)
    if src_lan and dst_lan:
        return None
    if src_lan:
        return pkt.dst_addr
    if dst_lan:
        return pkt.src_addr
    return pkt.dst_addr
