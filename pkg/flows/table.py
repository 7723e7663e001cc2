"""Bidirectional flow table with idle expiry and TCP close handling"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from capture.records import PacketRecord, TcpFlag
from tcp_perf import (FORWARD, REVERSE, EstablishmentOutcome, EventKind, TcpConnState, TcpEvent,
                      detect_establishment_problem, track_tcp)

from .keys import Endpoint, FlowKey, flow_key, packet_endpoints

logger = logging.getLogger(__name__)

DEFAULT_IDLE_TIMEOUT = 60.0
DEFAULT_FIN_LINGER = 2.0

END_IDLE = "idle"
END_CLOSED = "closed"
END_FLUSHED = "flushed"

# (pkt) -> (scope label, continent label), evaluated on the first packet
Labeler = Callable[[PacketRecord], Tuple[str, str]]


def _us(seconds: float) -> int:
    return int(round(seconds * 1_000_000))


@dataclass
class FlowRecord:
    """
    One bidirectional flow

    Forward is the initiator's direction: the sender of the first packet,
    or its receiver when that packet is a SYN/ACK.
    """
    key: FlowKey
    flow_id: str
    seq: int
    initiator: Endpoint
    first_ts_us: int
    last_ts_us: int
    packets_fwd: int = 0
    packets_rev: int = 0
    bytes_fwd: int = 0
    bytes_rev: int = 0
    server_port: Optional[int] = None
    fin_fwd: bool = False
    fin_rev: bool = False
    close_ts_us: Optional[int] = None
    tcp: Optional[TcpConnState] = None
    scope: Optional[str] = None
    continent: Optional[str] = None
    end_reason: Optional[str] = None
    establishment: Optional[EstablishmentOutcome] = None

    @property
    def events(self) -> List[TcpEvent]:
        return self.tcp.events if self.tcp is not None else []

    @property
    def first_ts(self) -> float:
        return self.first_ts_us / 1_000_000

    @property
    def last_ts(self) -> float:
        return self.last_ts_us / 1_000_000

    @property
    def duration(self) -> float:
        return (self.last_ts_us - self.first_ts_us) / 1_000_000

    @property
    def length(self) -> int:
        return self.packets_fwd + self.packets_rev

    @property
    def bytes_total(self) -> int:
        return self.bytes_fwd + self.bytes_rev

    @property
    def bidirectional(self) -> bool:
        return self.packets_fwd > 0 and self.packets_rev > 0

    @property
    def responder(self) -> Endpoint:
        a, b = self.key.endpoints
        return b if a == self.initiator else a

    def direction_of(self, pkt: PacketRecord) -> str:
        src, _ = packet_endpoints(pkt)
        return FORWARD if src == self.initiator else REVERSE

    def add(self, pkt: PacketRecord) -> str:
        """Account one packet; returns its direction"""
        direction = self.direction_of(pkt)
        if direction == FORWARD:
            self.packets_fwd += 1
            self.bytes_fwd += pkt.ip_total_length
        else:
            self.packets_rev += 1
            self.bytes_rev += pkt.ip_total_length
        self.last_ts_us = max(self.last_ts_us, pkt.ts_us)

        if pkt.is_tcp:
            if self.server_port is None and pkt.has_flag(TcpFlag.SYN):
                self.server_port = pkt.src_port if pkt.has_flag(TcpFlag.ACK) else pkt.dst_port
            if pkt.has_flag(TcpFlag.FIN):
                if direction == FORWARD:
                    self.fin_fwd = True
                else:
                    self.fin_rev = True
            if self.close_ts_us is None and (pkt.has_flag(TcpFlag.RST) or (self.fin_fwd and self.fin_rev)):
                self.close_ts_us = pkt.ts_us
            track_tcp(self.tcp, pkt, direction)
        return direction


class FlowTable:
    """
    Active flows of one trace

    Flows leave the table when idle for `idle_timeout` seconds, when a TCP
    close (FIN both ways or RST) is older than `fin_linger` seconds, or when
    a new SYN reuses a closed tuple. Finished flows accumulate in `finished`
    until drained.
    """

    def __init__(self, idle_timeout: float = DEFAULT_IDLE_TIMEOUT, fin_linger: float = DEFAULT_FIN_LINGER,
                 reorder_window_ms: float = 3.0, syn_timeout: float = 30.0,
                 labeler: Optional[Labeler] = None, trace_no: int = 0):
        """
        Args:
            idle_timeout: seconds of silence that end a flow
            fin_linger: seconds a closed TCP flow still absorbs stray packets
            reorder_window_ms: gap fillers arriving sooner count as out of order
            syn_timeout: seconds without SYN/ACK before a connection is unanswered
            labeler: scope/continent labels for a new flow's first packet
            trace_no: prefix of generated flow ids
        """
        self.idle_timeout_us = _us(idle_timeout)
        self.fin_linger_us = _us(fin_linger)
        self.reorder_window_us = _us(reorder_window_ms / 1000)
        self.syn_timeout = syn_timeout
        self.labeler = labeler
        self.trace_no = trace_no

        self.active: Dict[FlowKey, FlowRecord] = {}
        self.finished: List[FlowRecord] = []
        self.flows_created = 0
        self.flows_expired = 0
        self.flows_fin_closed = 0
        self.flows_flushed = 0

    def __len__(self) -> int:
        return len(self.active)

    def counters(self) -> Dict[str, int]:
        return {
            'flows_created': self.flows_created,
            'flows_expired': self.flows_expired,
            'flows_fin_closed': self.flows_fin_closed,
            'flows_flushed': self.flows_flushed,
        }

    def _create(self, key: FlowKey, pkt: PacketRecord) -> FlowRecord:
        src, dst = packet_endpoints(pkt)
        synack = pkt.is_tcp and pkt.has_flag(TcpFlag.SYN) and pkt.has_flag(TcpFlag.ACK)
        rec = FlowRecord(
            key=key,
            flow_id=f"{self.trace_no}.{self.flows_created}",
            seq=self.flows_created,
            initiator=dst if synack else src,
            first_ts_us=pkt.ts_us,
            last_ts_us=pkt.ts_us,
            tcp=TcpConnState(reorder_window_us=self.reorder_window_us) if pkt.is_tcp else None,
        )
        if self.labeler is not None:
            rec.scope, rec.continent = self.labeler(pkt)
        self.flows_created += 1
        self.active[key] = rec
        return rec

    def _finish(self, rec: FlowRecord, reason: str, now_us: int):
        del self.active[rec.key]
        rec.end_reason = reason
        if reason == END_IDLE:
            self.flows_expired += 1
        elif reason == END_CLOSED:
            self.flows_fin_closed += 1
        else:
            self.flows_flushed += 1

        if rec.tcp is not None:
            outcome = detect_establishment_problem(rec, now_us, self.syn_timeout)
            rec.establishment = outcome
            if outcome.failure is not None:
                direction = rec.tcp.syn_direction or FORWARD
                rec.tcp.events.append(TcpEvent(EventKind.ESTABLISHMENT_FAILURE, rec.last_ts_us,
                                               direction, reason=outcome.failure))
        self.finished.append(rec)

    def update_flow(self, pkt: PacketRecord) -> Tuple[FlowRecord, bool]:
        """
        Add a packet to its flow, starting a new flow when needed

        Returns:
            (flow, is_new)
        """
        key = flow_key(pkt)
        rec = self.active.get(key)
        if rec is not None:
            if rec.last_ts_us + self.idle_timeout_us <= pkt.ts_us:
                self._finish(rec, END_IDLE, pkt.ts_us)
                rec = None
            elif rec.close_ts_us is not None:
                pure_syn = pkt.has_flag(TcpFlag.SYN) and not pkt.has_flag(TcpFlag.ACK)
                if pure_syn or pkt.ts_us - rec.close_ts_us > self.fin_linger_us:
                    self._finish(rec, END_CLOSED, pkt.ts_us)
                    rec = None

        is_new = rec is None
        if is_new:
            rec = self._create(key, pkt)
        rec.add(pkt)
        return rec, is_new

    def _expire(self, now_us: int) -> List[FlowRecord]:
        done = []
        for rec in list(self.active.values()):
            if rec.close_ts_us is not None and now_us - rec.close_ts_us > self.fin_linger_us:
                self._finish(rec, END_CLOSED, now_us)
                done.append(rec)
            elif rec.last_ts_us + self.idle_timeout_us <= now_us:
                self._finish(rec, END_IDLE, now_us)
                done.append(rec)
        return done

    def expire_flows(self, now: float) -> List[FlowRecord]:
        """Finish flows idle for the timeout, or closed longer than the linger, at time `now` (seconds)"""
        return self._expire(_us(now))

    def expire_until(self, now_us: int) -> List[FlowRecord]:
        return self._expire(now_us)

    def flush(self, now_us: Optional[int] = None) -> List[FlowRecord]:
        """Finish every remaining flow at end of trace"""
        done = self._expire(now_us) if now_us is not None else []
        for rec in list(self.active.values()):
            end = now_us if now_us is not None else rec.last_ts_us
            self._finish(rec, END_FLUSHED, end)
            done.append(rec)
        if done:
            logger.info("Flushed flow table: %d flows finished", len(done))
        return done

    def drain_finished(self) -> List[FlowRecord]:
        """Hand over the finished flows and clear the accumulator"""
        done, self.finished = self.finished, []
        return done
