"""Immutable records produced by the trace reader"""

from dataclasses import dataclass, field, fields
from enum import Enum, IntEnum, IntFlag
from typing import Optional, Tuple


class LinkType(IntEnum):
    """libpcap link types the decoder understands"""
    ETHERNET = 1
    RAW = 101


class TimestampResolution(Enum):
    MICRO = "us"
    NANO = "ns"


class TcpFlag(IntFlag):
    FIN = 0x01
    SYN = 0x02
    RST = 0x04
    PSH = 0x08
    ACK = 0x10
    URG = 0x20
    ECE = 0x40
    CWR = 0x80


FLAG_NAMES = ('FIN', 'SYN', 'RST', 'PSH', 'ACK', 'URG', 'ECE', 'CWR')


@dataclass(frozen=True)
class CaptureMeta:
    """Global header facts of one pcap file"""
    link_type: LinkType
    snap_length: int
    timestamp_resolution: TimestampResolution
    byte_order: str  # '<' little-endian, '>' big-endian
    version: Tuple[int, int] = (2, 4)


@dataclass(frozen=True)
class TcpOptions:
    """Recognized TCP options; `partial` is set when parsing stopped on a malformed option"""
    mss: Optional[int] = None
    window_scale: Optional[int] = None
    sack_permitted: bool = False
    sack_blocks: Tuple[Tuple[int, int], ...] = ()
    timestamps: Optional[Tuple[int, int]] = None
    unknown: Tuple[int, ...] = ()
    partial: bool = False


NO_OPTIONS = TcpOptions()


@dataclass(frozen=True)
class PacketRecord:
    """One decoded IPv4 packet"""
    ts_us: int
    src_addr: int
    dst_addr: int
    protocol: int
    ip_total_length: int
    ip_header_length: int
    captured_length: int
    payload_length: int
    src_port: Optional[int] = None
    dst_port: Optional[int] = None
    tcp_seq: Optional[int] = None
    tcp_ack: Optional[int] = None
    tcp_flags: Optional[int] = None
    tcp_window: Optional[int] = None
    tcp_options: Optional[TcpOptions] = None
    truncated: bool = False
    fragment: bool = False

    @property
    def ts(self) -> float:
        """Timestamp in seconds"""
        return self.ts_us / 1_000_000

    @property
    def is_tcp(self) -> bool:
        return self.protocol == 6 and self.tcp_flags is not None

    @property
    def flow_eligible(self) -> bool:
        """Non-first fragments and port-less TCP/UDP attach to no flow"""
        if self.fragment:
            return False
        if self.protocol in (6, 17):
            return self.src_port is not None
        return True

    def has_flag(self, flag: TcpFlag) -> bool:
        return bool(self.tcp_flags and self.tcp_flags & flag)


@dataclass
class IngestStats:
    """
    Per-trace decode counters

    packets_total always equals packets_ipv4 + packets_ipv6_skipped +
    packets_non_ip_skipped + packets_truncated + decode_errors.
    """
    packets_total: int = 0
    packets_ipv4: int = 0
    packets_ipv6_skipped: int = 0
    packets_non_ip_skipped: int = 0
    packets_truncated: int = 0
    decode_errors: int = 0
    bytes_ipv4: int = 0
    fragments: int = 0
    monotonicity_violations: int = 0

    def accounted(self) -> int:
        return (self.packets_ipv4 + self.packets_ipv6_skipped + self.packets_non_ip_skipped
                + self.packets_truncated + self.decode_errors)

    def __add__(self, other: 'IngestStats') -> 'IngestStats':
        return IngestStats(**{
            f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)
        })

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
