"""TCP performance events"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class EventKind(Enum):
    RETRANSMISSION_PLAIN = "RetransmissionPlain"
    RETRANSMISSION_FAST = "RetransmissionFast"
    RETRANSMISSION_SPURIOUS = "RetransmissionSpurious"
    LOST_SEGMENT_INFERRED = "LostSegmentInferred"
    OUT_OF_ORDER = "OutOfOrder"
    DUPLICATE_ACK = "DuplicateAck"
    WINDOW_REDUCTION = "WindowReduction"
    ZERO_WINDOW = "ZeroWindow"
    ECE_SEEN = "EceSeen"
    CWR_SEEN = "CwrSeen"
    SYN_RETRY = "SynRetry"
    ESTABLISHMENT_FAILURE = "EstablishmentFailure"


RETRANSMISSION_KINDS = frozenset({
    EventKind.RETRANSMISSION_PLAIN,
    EventKind.RETRANSMISSION_FAST,
    EventKind.RETRANSMISSION_SPURIOUS,
})
LOSS_EVIDENCE_KINDS = RETRANSMISSION_KINDS | {EventKind.LOST_SEGMENT_INFERRED}
FLAG_KINDS = frozenset({EventKind.ECE_SEEN, EventKind.CWR_SEEN})

FORWARD = "fwd"
REVERSE = "rev"


def opposite(direction: str) -> str:
    return REVERSE if direction == FORWARD else FORWARD


@dataclass(frozen=True)
class TcpEvent:
    """
    One observation about a TCP flow

    `direction` is the sender of the packet that produced the event.
    `seq` and `length` are relative to the sender's first captured byte.
    """
    kind: EventKind
    ts_us: int
    direction: str
    seq: Optional[int] = None
    length: int = 0
    from_bytes: Optional[int] = None
    to_bytes: Optional[int] = None
    reason: Optional[str] = None
    handshake: bool = False

    @property
    def ts(self) -> float:
        return self.ts_us / 1_000_000

    def detail(self) -> str:
        """Short human-readable context for the event log"""
        if self.kind == EventKind.WINDOW_REDUCTION:
            return f"{self.from_bytes}->{self.to_bytes}"
        if self.kind == EventKind.ESTABLISHMENT_FAILURE:
            return self.reason or ''
        if self.kind in FLAG_KINDS and self.handshake:
            return "handshake"
        if self.seq is not None:
            return f"seq={self.seq} len={self.length}"
        return ''
