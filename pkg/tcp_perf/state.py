"""Per-direction and per-connection TCP tracking state"""

from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .events import FORWARD, REVERSE, TcpEvent
from .seqspace import RangeSet, unwrap

DEFAULT_REORDER_WINDOW_US = 3_000
MAX_WINDOW_SCALE = 14

PARTITION_BUCKETS = ('in_order', 'retx_plain', 'retx_fast', 'retx_spurious', 'out_of_order')


@dataclass
class Hole:
    """Bytes skipped by a segment that jumped ahead"""
    start: int
    end: int
    created_us: int


@dataclass
class TcpDirState:
    """
    Sequence tracking for the bytes one endpoint sends

    Offsets are absolute and relative to `base` (ISN + 1 when the SYN was
    captured, else the first captured sequence number). `acked_upto` and the
    duplicate-ACK counters describe what the peer acknowledged of these bytes.
    """
    isn: Optional[int] = None
    base: Optional[int] = None
    highest: int = 0
    max_seq: Optional[int] = None
    acked_upto: Optional[int] = None
    seen: RangeSet = field(default_factory=RangeSet)
    retransmitted: RangeSet = field(default_factory=RangeSet)
    holes: List[Hole] = field(default_factory=list)

    # handshake
    syn_seen: bool = False
    window_scale_offer: Optional[int] = None
    window_scale: int = 0

    # what this endpoint advertised and acknowledged
    last_adv_window_bytes: Optional[int] = None
    last_window_raw: Optional[int] = None
    last_ack_sent: Optional[int] = None

    # duplicate ACKs received for these bytes
    dup_ack_value: Optional[int] = None
    dup_ack_count: int = 0

    # heap of (right edge, send ts, left edge) waiting for an ACK
    pending_rtt: List[Tuple[int, int, int]] = field(default_factory=list)

    @property
    def next_seq(self) -> Optional[int]:
        """Edge after the highest byte captured so far"""
        return self.max_seq

    def to_abs(self, raw: int) -> int:
        """Absolute offset for a raw 32-bit sequence or ACK number"""
        if self.base is None:
            self.base = raw
        offset = unwrap(raw, self.base, self.highest)
        if offset > self.highest:
            self.highest = offset
        return offset


@dataclass
class TcpConnState:
    """Both directions of a TCP connection plus handshake and census data"""
    reorder_window_us: int = DEFAULT_REORDER_WINDOW_US
    fwd: TcpDirState = field(default_factory=TcpDirState)
    rev: TcpDirState = field(default_factory=TcpDirState)
    events: List[TcpEvent] = field(default_factory=list)
    flag_counts: Counter = field(default_factory=Counter)

    # handshake timing
    syn_direction: Optional[str] = None
    first_syn_us: Optional[int] = None
    last_syn_us: Optional[int] = None
    synack_us: Optional[int] = None
    handshake_ack_us: Optional[int] = None
    syn_retries: int = 0
    refused: bool = False

    # data packet partition, packets and bytes
    partition_packets: Counter = field(default_factory=Counter)
    partition_bytes: Counter = field(default_factory=Counter)
    late_fillers: int = 0
    lost_gaps: int = 0
    lost_bytes: int = 0

    ack_samples_us: List[int] = field(default_factory=list)

    def side(self, direction: str) -> TcpDirState:
        return self.fwd if direction == FORWARD else self.rev

    def peer(self, direction: str) -> TcpDirState:
        return self.rev if direction == FORWARD else self.fwd

    @property
    def responder_direction(self) -> Optional[str]:
        if self.syn_direction is None:
            return None
        return REVERSE if self.syn_direction == FORWARD else FORWARD

    @property
    def data_packets(self) -> int:
        return sum(self.partition_packets.values())

    def count(self, kind) -> int:
        return sum(1 for e in self.events if e.kind == kind)
