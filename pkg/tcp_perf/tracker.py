"""Per-packet TCP analysis: retransmissions, reordering, duplicate ACKs, windows, handshake"""

import heapq
import logging
from enum import Enum
from typing import List, Optional, Tuple

from capture.records import PacketRecord, TcpFlag

from .events import FORWARD, REVERSE, EventKind, TcpEvent
from .seqspace import SEQ_MOD
from .state import MAX_WINDOW_SCALE, Hole, TcpConnState, TcpDirState

logger = logging.getLogger(__name__)

RETX_BUCKETS = {
    EventKind.RETRANSMISSION_PLAIN: 'retx_plain',
    EventKind.RETRANSMISSION_FAST: 'retx_fast',
    EventKind.RETRANSMISSION_SPURIOUS: 'retx_spurious',
}
DUP_ACK_THRESHOLD = 3


class SegmentOrder(Enum):
    """Placement of a never-seen data segment in its stream"""
    IN_ORDER = "in_order"
    GAP = "gap"
    OUT_OF_ORDER = "out_of_order"
    LATE_FILLER = "late_filler"


def classify_retransmission(state: TcpDirState, start: int, end: int) -> EventKind:
    """
    Kind of a segment whose bytes [start, end) were captured before

    Spurious when the peer had already acknowledged every byte, Fast after
    three duplicate ACKs for the segment's left edge, Plain otherwise.
    A fast retransmission consumes the duplicate-ACK count.
    """
    if state.acked_upto is not None and end <= state.acked_upto:
        return EventKind.RETRANSMISSION_SPURIOUS
    if state.dup_ack_count >= DUP_ACK_THRESHOLD and state.dup_ack_value == start:
        state.dup_ack_count = 0
        return EventKind.RETRANSMISSION_FAST
    return EventKind.RETRANSMISSION_PLAIN


def _fill_holes(state: TcpDirState, start: int, end: int) -> Optional[int]:
    """Remove [start, end) from the open holes; creation time of the oldest hole touched"""
    oldest = None
    remaining: List[Hole] = []
    for hole in state.holes:
        if hole.end <= start or hole.start >= end:
            remaining.append(hole)
            continue
        if oldest is None or hole.created_us < oldest:
            oldest = hole.created_us
        if hole.start < start:
            remaining.append(Hole(hole.start, start, hole.created_us))
        if hole.end > end:
            remaining.append(Hole(end, hole.end, hole.created_us))
    state.holes = remaining
    return oldest


def detect_gap_and_ooo(state: TcpDirState, start: int, end: int, ts_us: int,
                       reorder_window_us: int) -> Tuple[SegmentOrder, Optional[Tuple[int, int]]]:
    """
    Place a new (never captured) data segment relative to the highest byte seen

    Returns:
        (order, gap) where gap is the skipped byte range for SegmentOrder.GAP
    """
    if state.max_seq is None or start == state.max_seq:
        return SegmentOrder.IN_ORDER, None
    if start > state.max_seq:
        gap = (state.max_seq, start)
        state.holes.append(Hole(gap[0], gap[1], ts_us))
        return SegmentOrder.GAP, gap

    created = _fill_holes(state, start, end)
    if created is not None and ts_us - created <= reorder_window_us:
        return SegmentOrder.OUT_OF_ORDER, None
    return SegmentOrder.LATE_FILLER, None


def detect_window_reduction(state: TcpDirState, pkt: PacketRecord, direction: str) -> List[TcpEvent]:
    """WindowReduction (and ZeroWindow when it drops to 0) against the sender's previous window"""
    scaled = pkt.tcp_window << state.window_scale
    previous = state.last_adv_window_bytes
    state.last_adv_window_bytes = scaled
    if previous is None or scaled >= previous:
        return []
    events = [TcpEvent(EventKind.WINDOW_REDUCTION, pkt.ts_us, direction,
                       from_bytes=previous, to_bytes=scaled)]
    if scaled == 0:
        events.append(TcpEvent(EventKind.ZERO_WINDOW, pkt.ts_us, direction, from_bytes=previous, to_bytes=0))
    return events


def _resolve_window_scale(conn: TcpConnState):
    if not (conn.fwd.syn_seen and conn.rev.syn_seen):
        return
    offers = (conn.fwd.window_scale_offer, conn.rev.window_scale_offer)
    if None in offers:
        conn.fwd.window_scale = conn.rev.window_scale = 0
    else:
        conn.fwd.window_scale = min(offers[0], MAX_WINDOW_SCALE)
        conn.rev.window_scale = min(offers[1], MAX_WINDOW_SCALE)


def _track_syn(conn: TcpConnState, state: TcpDirState, pkt: PacketRecord, direction: str,
               events: List[TcpEvent]):
    ts = pkt.ts_us
    if pkt.has_flag(TcpFlag.ACK):
        if conn.synack_us is None:
            conn.synack_us = ts
            if conn.syn_direction is None:
                conn.syn_direction = REVERSE if direction == FORWARD else FORWARD
    elif conn.first_syn_us is None:
        conn.first_syn_us = conn.last_syn_us = ts
        conn.syn_direction = direction
    elif direction == conn.syn_direction and conn.synack_us is None:
        conn.syn_retries += 1
        conn.last_syn_us = ts
        events.append(TcpEvent(EventKind.SYN_RETRY, ts, direction))

    options = pkt.tcp_options
    state.window_scale_offer = options.window_scale if options is not None else None
    state.syn_seen = True
    if state.max_seq is None:
        state.isn = pkt.tcp_seq
        state.base = (pkt.tcp_seq + 1) % SEQ_MOD
        state.highest = 0
        state.max_seq = 0
    _resolve_window_scale(conn)


def _track_data(conn: TcpConnState, state: TcpDirState, pkt: PacketRecord, direction: str,
                events: List[TcpEvent]):
    length = pkt.payload_length
    start = state.to_abs(pkt.tcp_seq)
    end = start + length
    ts = pkt.ts_us

    if state.seen.intersects(start, end):
        kind = classify_retransmission(state, start, end)
        state.retransmitted.add(start, end)
        _fill_holes(state, start, end)
        events.append(TcpEvent(kind, ts, direction, seq=start, length=length))
        bucket = RETX_BUCKETS[kind]
    else:
        order, gap = detect_gap_and_ooo(state, start, end, ts, conn.reorder_window_us)
        bucket = 'in_order'
        if order == SegmentOrder.GAP:
            conn.lost_gaps += 1
            conn.lost_bytes += gap[1] - gap[0]
            events.append(TcpEvent(EventKind.LOST_SEGMENT_INFERRED, ts, direction,
                                   seq=gap[0], length=gap[1] - gap[0]))
        elif order == SegmentOrder.OUT_OF_ORDER:
            events.append(TcpEvent(EventKind.OUT_OF_ORDER, ts, direction, seq=start, length=length))
            bucket = 'out_of_order'
        elif order == SegmentOrder.LATE_FILLER:
            conn.late_fillers += 1
        heapq.heappush(state.pending_rtt, (end, ts, start))

    state.seen.add(start, end)
    state.max_seq = end if state.max_seq is None else max(state.max_seq, end)
    conn.partition_packets[bucket] += 1
    conn.partition_bytes[bucket] += length


def _match_rtt(conn: TcpConnState, state: TcpDirState, ack_abs: int, ts_us: int):
    """Pair acknowledged right edges with this ACK, skipping retransmitted ranges"""
    pending = state.pending_rtt
    while pending and pending[0][0] <= ack_abs:
        edge, sent_us, start = heapq.heappop(pending)
        if not state.retransmitted.intersects(start, edge):
            conn.ack_samples_us.append(ts_us - sent_us)


def _track_ack(conn: TcpConnState, sender: TcpDirState, acked: TcpDirState, pkt: PacketRecord,
               direction: str, events: List[TcpEvent]):
    flags = pkt.tcp_flags
    ack_abs = acked.to_abs(pkt.tcp_ack)
    pure = pkt.payload_length == 0 and not flags & (TcpFlag.SYN | TcpFlag.FIN | TcpFlag.RST)

    if pure and sender.last_ack_sent == ack_abs and sender.last_window_raw == pkt.tcp_window:
        if acked.dup_ack_value == ack_abs:
            acked.dup_ack_count += 1
        else:
            acked.dup_ack_value = ack_abs
            acked.dup_ack_count = 1
        events.append(TcpEvent(EventKind.DUPLICATE_ACK, pkt.ts_us, direction, seq=ack_abs))
    elif sender.last_ack_sent is None or ack_abs > sender.last_ack_sent:
        acked.dup_ack_value = None
        acked.dup_ack_count = 0

    if sender.last_ack_sent is None or ack_abs > sender.last_ack_sent:
        sender.last_ack_sent = ack_abs
    sender.last_window_raw = pkt.tcp_window
    if acked.acked_upto is None or ack_abs > acked.acked_upto:
        acked.acked_upto = ack_abs
    _match_rtt(conn, acked, ack_abs, pkt.ts_us)

    if (not flags & TcpFlag.SYN and conn.synack_us is not None and conn.handshake_ack_us is None
            and direction == conn.syn_direction):
        conn.handshake_ack_us = pkt.ts_us


def track_tcp(conn: TcpConnState, pkt: PacketRecord, direction: str) -> List[TcpEvent]:
    """
    Feed one TCP packet of a flow, in timestamp order

    Args:
        conn: the flow's connection state
        pkt: decoded TCP packet
        direction: FORWARD when sent by the flow initiator, else REVERSE

    Returns:
        Events produced by this packet (also appended to conn.events)
    """
    events: List[TcpEvent] = []
    flags = pkt.tcp_flags or 0
    sender = conn.side(direction)
    peer = conn.peer(direction)
    syn = bool(flags & TcpFlag.SYN)
    rst = bool(flags & TcpFlag.RST)

    for flag in TcpFlag:
        if flags & flag:
            conn.flag_counts[flag.name] += 1
    if flags & TcpFlag.ECE:
        events.append(TcpEvent(EventKind.ECE_SEEN, pkt.ts_us, direction, handshake=syn))
    if flags & TcpFlag.CWR:
        events.append(TcpEvent(EventKind.CWR_SEEN, pkt.ts_us, direction, handshake=syn))

    if syn:
        _track_syn(conn, sender, pkt, direction, events)
    if rst and conn.synack_us is None and direction == conn.responder_direction:
        conn.refused = True

    if pkt.payload_length > 0 and not syn and not rst:
        _track_data(conn, sender, pkt, direction, events)
    elif sender.base is None and not syn:
        sender.base = pkt.tcp_seq

    if flags & TcpFlag.ACK and pkt.tcp_ack is not None:
        _track_ack(conn, sender, peer, pkt, direction, events)
        if not syn and not rst:
            events.extend(detect_window_reduction(sender, pkt, direction))

    if events:
        logger.debug("%d TCP events at %d us (%s)", len(events), pkt.ts_us, direction)
        conn.events.extend(events)
    return events
