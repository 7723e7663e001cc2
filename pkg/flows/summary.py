"""Flow metrics and the persistence-ready flow summary"""

from dataclasses import dataclass
from typing import Optional

from anon import Anonymizer
from classify import ServiceDb, classify_service, transport_label
from tcp_perf import EventKind, derive_congestion_events, estimate_rtt
from utils.ipv4 import int_to_ip

from .table import FlowRecord


@dataclass(frozen=True)
class FlowMetrics:
    length_pkts: int
    bytes_total: int
    duration_s: float
    mean_rate_bits_per_s: Optional[float]


def _rate(nbytes: int, duration_us: int) -> Optional[float]:
    if duration_us <= 0:
        return None
    return 8 * nbytes * 1_000_000 / duration_us


def flow_metrics(flow: FlowRecord) -> FlowMetrics:
    """Length, volume, duration and mean rate; the rate is None for zero-duration flows"""
    duration_us = flow.last_ts_us - flow.first_ts_us
    return FlowMetrics(
        length_pkts=flow.length,
        bytes_total=flow.bytes_total,
        duration_s=duration_us / 1_000_000,
        mean_rate_bits_per_s=_rate(flow.bytes_total, duration_us),
    )


def _round(value: Optional[float], digits: int) -> Optional[float]:
    return None if value is None else round(value, digits)


def _ms(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(value * 1000, 3)


@dataclass(frozen=True)
class FlowSummary:
    """
    Immutable view of a finished flow, field order is the export column order

    Addresses are dotted quads; `anonymized` records whether they went
    through the anonymizer.
    """
    flow_id: str
    protocol: int
    transport: str
    initiator_addr: str
    initiator_port: int
    responder_addr: str
    responder_port: int
    first_ts: float
    duration_s: float
    packets: int
    packets_fwd: int
    packets_rev: int
    bytes: int
    bytes_fwd: int
    bytes_rev: int
    bidirectional: bool
    mean_rate_bps: Optional[float]
    rate_fwd_bps: Optional[float]
    rate_rev_bps: Optional[float]
    service: str
    scope: str
    continent: str
    end_reason: str
    data_packets: int = 0
    in_order: int = 0
    retx_plain: int = 0
    retx_fast: int = 0
    retx_spurious: int = 0
    out_of_order: int = 0
    data_bytes: int = 0
    in_order_bytes: int = 0
    retx_plain_bytes: int = 0
    retx_fast_bytes: int = 0
    retx_spurious_bytes: int = 0
    out_of_order_bytes: int = 0
    late_fillers: int = 0
    lost_gaps: int = 0
    lost_bytes: int = 0
    dup_acks: int = 0
    window_reductions: int = 0
    zero_windows: int = 0
    flag_fin: int = 0
    flag_syn: int = 0
    flag_rst: int = 0
    flag_psh: int = 0
    flag_ack: int = 0
    flag_urg: int = 0
    flag_ece: int = 0
    flag_cwr: int = 0
    syn_retries: int = 0
    establishment_failure: str = ''
    congestion_events: int = 0
    congestion_flag: int = 0
    congestion_correlated: int = 0
    rtt_handshake_ms: Optional[float] = None
    rtt_syn_side_ms: Optional[float] = None
    rtt_ack_side_ms: Optional[float] = None
    rtt_samples: int = 0
    rtt_median_ms: Optional[float] = None
    rtt_min_ms: Optional[float] = None
    anonymized: bool = False

    @property
    def is_tcp(self) -> bool:
        return self.protocol == 6


def summarize_flow(flow: FlowRecord, anonymizer: Optional[Anonymizer], services: ServiceDb,
                   correlation_window: float = 1.0) -> FlowSummary:
    """
    Build the export view of a finished flow

    Args:
        flow: finished flow
        anonymizer: address map applied to both endpoints; None keeps raw addresses
        services: services db for the TCP service label
        correlation_window: seconds for congestion rule two
    """
    duration_us = flow.last_ts_us - flow.first_ts_us
    (init_addr, init_port), (resp_addr, resp_port) = flow.initiator, flow.responder
    if anonymizer is not None:
        init_addr, resp_addr = anonymizer.anonymize(init_addr), anonymizer.anonymize(resp_addr)

    base = dict(
        flow_id=flow.flow_id,
        protocol=flow.key.protocol,
        transport=transport_label(flow.key.protocol),
        initiator_addr=int_to_ip(init_addr),
        initiator_port=init_port,
        responder_addr=int_to_ip(resp_addr),
        responder_port=resp_port,
        first_ts=round(flow.first_ts_us / 1_000_000, 6),
        duration_s=round(duration_us / 1_000_000, 6),
        packets=flow.length,
        packets_fwd=flow.packets_fwd,
        packets_rev=flow.packets_rev,
        bytes=flow.bytes_total,
        bytes_fwd=flow.bytes_fwd,
        bytes_rev=flow.bytes_rev,
        bidirectional=flow.bidirectional,
        mean_rate_bps=_round(_rate(flow.bytes_total, duration_us), 3),
        rate_fwd_bps=_round(_rate(flow.bytes_fwd, duration_us), 3),
        rate_rev_bps=_round(_rate(flow.bytes_rev, duration_us), 3),
        service='',
        scope=flow.scope or '',
        continent=flow.continent or '',
        end_reason=flow.end_reason or '',
        anonymized=anonymizer is not None,
    )

    conn = flow.tcp
    if conn is None:
        return FlowSummary(**base)

    rtt = estimate_rtt(flow)
    congestion = derive_congestion_events(flow, correlation_window)
    outcome = flow.establishment
    flags = conn.flag_counts
    base['service'] = classify_service(flow, services)
    return FlowSummary(
        **base,
        data_packets=conn.data_packets,
        in_order=conn.partition_packets['in_order'],
        retx_plain=conn.partition_packets['retx_plain'],
        retx_fast=conn.partition_packets['retx_fast'],
        retx_spurious=conn.partition_packets['retx_spurious'],
        out_of_order=conn.partition_packets['out_of_order'],
        data_bytes=sum(conn.partition_bytes.values()),
        in_order_bytes=conn.partition_bytes['in_order'],
        retx_plain_bytes=conn.partition_bytes['retx_plain'],
        retx_fast_bytes=conn.partition_bytes['retx_fast'],
        retx_spurious_bytes=conn.partition_bytes['retx_spurious'],
        out_of_order_bytes=conn.partition_bytes['out_of_order'],
        late_fillers=conn.late_fillers,
        lost_gaps=conn.lost_gaps,
        lost_bytes=conn.lost_bytes,
        dup_acks=conn.count(EventKind.DUPLICATE_ACK),
        window_reductions=conn.count(EventKind.WINDOW_REDUCTION),
        zero_windows=conn.count(EventKind.ZERO_WINDOW),
        flag_fin=flags['FIN'],
        flag_syn=flags['SYN'],
        flag_rst=flags['RST'],
        flag_psh=flags['PSH'],
        flag_ack=flags['ACK'],
        flag_urg=flags['URG'],
        flag_ece=flags['ECE'],
        flag_cwr=flags['CWR'],
        syn_retries=conn.syn_retries,
        establishment_failure=(outcome.failure or '') if outcome is not None else '',
        congestion_events=congestion.count,
        congestion_flag=congestion.flag_count,
        congestion_correlated=congestion.correlated_count,
        rtt_handshake_ms=_ms(rtt.handshake_total),
        rtt_syn_side_ms=_ms(rtt.handshake_syn_side),
        rtt_ack_side_ms=_ms(rtt.handshake_ack_side),
        rtt_samples=len(rtt.ack_samples),
        rtt_median_ms=_ms(rtt.summary.median) if rtt.summary else None,
        rtt_min_ms=_ms(rtt.summary.min) if rtt.summary else None,
    )
