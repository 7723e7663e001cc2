import random
from collections import Counter
from decimal import Decimal
from fractions import Fraction

import pytest

from analytics import spreading_table
from capture import TcpFlag
from classify import ServiceDb
from flows import FlowTable, summarize_flow
from tcp_perf import (FORWARD, NO_ANSWER, PARTITION_BUCKETS, REFUSED, REVERSE, EstablishmentOutcome, EventKind,
                      SegmentOrder, TcpDirState, classify_retransmission, derive_congestion_events,
                      detect_establishment_problem, detect_gap_and_ooo, detect_window_reduction,
                      estimate_rtt)
from tests.helpers import c2s, feed, handshake, s2c

ACK = TcpFlag.ACK
PSH_ACK = TcpFlag.PSH | TcpFlag.ACK


def _kinds(flow):
    return [e.kind for e in flow.events]


def _run(packets, **table_args):
    table = FlowTable(**table_args)
    flow = feed(table, packets)
    return table, flow


def test_in_order_stream_has_no_events():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.380, seq=5001, ack=1201),
    ]
    _, flow = _run(packets)
    assert flow.events == []
    assert flow.tcp.partition_packets['in_order'] == 2
    assert flow.tcp.partition_bytes['in_order'] == 200


def test_plain_and_spurious_retransmissions():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.202, seq=1201, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.250, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.300, seq=5001, ack=1301),
        c2s(0.600, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets)
    assert _kinds(flow) == [EventKind.RETRANSMISSION_PLAIN, EventKind.RETRANSMISSION_SPURIOUS]
    plain, spurious = flow.events
    assert (plain.seq, plain.length, plain.direction) == (100, 100, FORWARD)
    assert spurious.seq == 0
    assert flow.tcp.partition_packets['retx_plain'] == 1
    assert flow.tcp.partition_packets['retx_spurious'] == 1
    assert flow.tcp.data_packets == 5


def test_fast_retransmission_after_three_duplicate_acks():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.202, seq=1201, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.380, seq=5001, ack=1101),
        s2c(0.381, seq=5001, ack=1101),
        s2c(0.382, seq=5001, ack=1101),
        s2c(0.383, seq=5001, ack=1101),
        c2s(0.384, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets)
    assert _kinds(flow) == [EventKind.DUPLICATE_ACK] * 3 + [EventKind.RETRANSMISSION_FAST]
    assert all(e.direction == REVERSE for e in flow.events[:3])
    assert flow.tcp.partition_packets['retx_fast'] == 1


def test_two_duplicate_acks_are_not_enough():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.380, seq=5001, ack=1101),
        s2c(0.381, seq=5001, ack=1101),
        s2c(0.382, seq=5001, ack=1101),
        c2s(0.384, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets)
    assert _kinds(flow)[-1] == EventKind.RETRANSMISSION_PLAIN


def test_duplicate_ack_requires_same_window():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.380, seq=5001, ack=1101, win=65535),
        s2c(0.381, seq=5001, ack=1101, win=65000),
    ]
    _, flow = _run(packets)
    assert EventKind.DUPLICATE_ACK not in _kinds(flow)


def test_gap_then_out_of_order_filler():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1201, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.202, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets)
    assert _kinds(flow) == [EventKind.LOST_SEGMENT_INFERRED, EventKind.OUT_OF_ORDER]
    gap = flow.events[0]
    assert (gap.seq, gap.length) == (100, 100)
    assert flow.tcp.lost_gaps == 1 and flow.tcp.lost_bytes == 100
    assert flow.tcp.partition_packets['out_of_order'] == 1
    assert flow.tcp.late_fillers == 0


def test_late_filler_is_not_out_of_order():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1201, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.300, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets)
    assert _kinds(flow) == [EventKind.LOST_SEGMENT_INFERRED]
    assert flow.tcp.late_fillers == 1
    assert flow.tcp.partition_packets['in_order'] == 3


def test_reorder_window_is_configurable():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1201, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.300, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
    ]
    _, flow = _run(packets, reorder_window_ms=150)
    assert _kinds(flow)[-1] == EventKind.OUT_OF_ORDER


def test_sequence_wraparound_stays_in_order():
    isn = (1 << 32) - 50
    packets = handshake(client_isn=isn) + [
        c2s(0.200, seq=isn + 1, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=isn + 101, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.380, seq=5001, ack=isn + 201),
    ]
    _, flow = _run(packets)
    assert flow.events == []
    assert flow.tcp.partition_packets['in_order'] == 2
    assert flow.tcp.fwd.acked_upto == 200


def test_window_reduction_uses_negotiated_scale():
    packets = handshake(client_wscale=2, server_wscale=3) + [
        s2c(0.300, seq=5001, ack=1001, win=1000),
        s2c(0.400, seq=5001, ack=1001, win=500),
        s2c(0.500, seq=5001, ack=1001, win=0),
        s2c(0.600, seq=5001, ack=1001, win=800),
    ]
    _, flow = _run(packets)
    kinds = [k for k in _kinds(flow) if k != EventKind.DUPLICATE_ACK]
    assert kinds == [EventKind.WINDOW_REDUCTION, EventKind.WINDOW_REDUCTION, EventKind.ZERO_WINDOW]
    reductions = [e for e in flow.events if e.kind == EventKind.WINDOW_REDUCTION]
    assert [(e.from_bytes, e.to_bytes) for e in reductions] == [(8000, 4000), (4000, 0)]
    assert all(e.direction == REVERSE for e in reductions)
    assert reductions[0].detail() == '8000->4000'


def test_window_scale_ignored_unless_both_sides_offer_it():
    packets = handshake(client_wscale=2) + [
        s2c(0.300, seq=5001, ack=1001, win=1000),
        s2c(0.400, seq=5001, ack=1001, win=500),
    ]
    _, flow = _run(packets)
    (reduction,) = [e for e in flow.events if e.kind == EventKind.WINDOW_REDUCTION]
    assert (reduction.from_bytes, reduction.to_bytes) == (1000, 500)


def test_handshake_rtt_components():
    _, flow = _run(handshake())
    rtt = estimate_rtt(flow)
    assert rtt.handshake_syn_side == pytest.approx(0.180)
    assert rtt.handshake_ack_side == pytest.approx(0.001)
    assert rtt.handshake_total == pytest.approx(0.181)


def test_ack_rtt_samples_follow_karn():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.201, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        c2s(0.400, seq=1101, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.500, seq=5001, ack=1201),
    ]
    _, flow = _run(packets)
    rtt = estimate_rtt(flow)
    assert rtt.ack_samples == pytest.approx((0.300,))
    assert rtt.summary.median == pytest.approx(0.300)


def test_rtt_without_handshake():
    packets = [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        s2c(0.300, seq=5001, ack=1101),
    ]
    _, flow = _run(packets)
    rtt = estimate_rtt(flow)
    assert rtt.handshake_total is None
    assert rtt.ack_samples == pytest.approx((0.100,))


def _congested(flags_packet=None):
    packets = handshake() + [
        c2s(1.000, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        c2s(1.200, seq=1001, ack=5001, flags=PSH_ACK, payload=100),
        s2c(1.300, seq=5001, ack=1101, win=65535),
        s2c(1.500, seq=5001, ack=1101, win=30000),
    ]
    if flags_packet is not None:
        packets.append(flags_packet)
    return _run(packets)[1]


def test_window_reduction_correlated_with_loss():
    flow = _congested()
    report = derive_congestion_events(flow, correlation_window=1.0)
    assert report.correlated_count == 1
    reduction, evidence = report.correlated[0]
    assert reduction.kind == EventKind.WINDOW_REDUCTION
    assert evidence.kind == EventKind.RETRANSMISSION_PLAIN
    assert report.count == 1

    assert derive_congestion_events(flow, correlation_window=0.2).correlated_count == 0


def test_ecn_flags_count_once_outside_handshake():
    ece = c2s(2.000, seq=1101, ack=5001, flags=TcpFlag.ACK | TcpFlag.ECE)
    flow = _congested(ece)
    report = derive_congestion_events(flow, correlation_window=0.2)
    assert report.flag_count == 1
    assert report.count == 1

    ecn_setup = handshake()
    ecn_setup[0] = c2s(0.0, seq=1000, flags=TcpFlag.SYN | TcpFlag.ECE | TcpFlag.CWR)
    _, quiet = _run(ecn_setup)
    assert derive_congestion_events(quiet).flag_count == 0
    assert quiet.tcp.flag_counts['ECE'] == 1


def test_unanswered_syn_with_retries():
    table = FlowTable(syn_timeout=30)
    feed(table, [c2s(0.0, seq=1000, flags=TcpFlag.SYN), c2s(3.0, seq=1000, flags=TcpFlag.SYN),
                 c2s(9.0, seq=1000, flags=TcpFlag.SYN)])
    (flow,) = table.flush(31_000_000)
    assert flow.establishment.failure == NO_ANSWER
    assert flow.establishment.syn_retries == 2
    assert _kinds(flow) == [EventKind.SYN_RETRY, EventKind.SYN_RETRY, EventKind.ESTABLISHMENT_FAILURE]
    assert flow.events[-1].detail() == NO_ANSWER


def test_syn_still_pending_is_not_a_failure():
    table = FlowTable(syn_timeout=30)
    feed(table, [c2s(0.0, seq=1000, flags=TcpFlag.SYN)])
    (flow,) = table.flush(5_000_000)
    assert flow.establishment.failure is None


def test_refused_connection():
    table = FlowTable()
    feed(table, [c2s(0.0, seq=1000, flags=TcpFlag.SYN),
                 s2c(0.1, seq=0, ack=1001, flags=TcpFlag.RST | TcpFlag.ACK)])
    (flow,) = table.flush(200_000)
    assert flow.establishment.failure == REFUSED
    assert flow.tcp.flag_counts['RST'] == 1


def test_flag_census():
    packets = handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=PSH_ACK, payload=10),
        c2s(0.300, seq=1011, ack=5001, flags=TcpFlag.FIN | TcpFlag.ACK),
    ]
    _, flow = _run(packets)
    counts = flow.tcp.flag_counts
    assert counts['SYN'] == 2
    assert counts['ACK'] == 4
    assert counts['PSH'] == 1
    assert counts['FIN'] == 1


def test_classify_retransmission_on_direction_state():
    state = TcpDirState(acked_upto=100)
    assert classify_retransmission(state, 0, 100) == EventKind.RETRANSMISSION_SPURIOUS
    assert classify_retransmission(state, 100, 200) == EventKind.RETRANSMISSION_PLAIN

    state.dup_ack_value, state.dup_ack_count = 100, 3
    assert classify_retransmission(state, 100, 200) == EventKind.RETRANSMISSION_FAST
    assert state.dup_ack_count == 0


def test_detect_gap_and_ooo_on_direction_state():
    state = TcpDirState(max_seq=100)
    assert detect_gap_and_ooo(state, 100, 200, 0, 3_000) == (SegmentOrder.IN_ORDER, None)

    assert detect_gap_and_ooo(state, 300, 400, 1_000, 3_000) == (SegmentOrder.GAP, (100, 300))
    state.max_seq = 400  # advanced by the caller
    assert detect_gap_and_ooo(state, 100, 200, 2_000, 3_000) == (SegmentOrder.OUT_OF_ORDER, None)
    assert detect_gap_and_ooo(state, 200, 300, 9_000, 3_000) == (SegmentOrder.LATE_FILLER, None)
    assert state.holes == []


def test_detect_window_reduction_on_direction_state():
    state = TcpDirState(window_scale=2)
    assert detect_window_reduction(state, c2s(0.0, win=1000), FORWARD) == []
    assert detect_window_reduction(state, c2s(0.1, win=2000), FORWARD) == []

    (reduction,) = detect_window_reduction(state, c2s(0.2, win=500), FORWARD)
    assert (reduction.kind, reduction.from_bytes, reduction.to_bytes) == (EventKind.WINDOW_REDUCTION, 8000, 2000)

    events = detect_window_reduction(state, c2s(0.3, win=0), FORWARD)
    assert [e.kind for e in events] == [EventKind.WINDOW_REDUCTION, EventKind.ZERO_WINDOW]


def test_detect_establishment_problem_depends_on_now():
    table = FlowTable()
    flow = feed(table, [c2s(1.0, seq=1000, flags=TcpFlag.SYN)])
    assert detect_establishment_problem(flow, 30_999_999).failure is None
    assert detect_establishment_problem(flow, 31_000_000).failure == NO_ANSWER
    assert detect_establishment_problem(flow, 11_000_000, syn_timeout=10).failure == NO_ANSWER


def test_establishment_is_clean_after_handshake():
    table = FlowTable()
    flow = feed(table, handshake())
    assert detect_establishment_problem(flow, 100_000_000) == EstablishmentOutcome(None, 0)


def test_late_synack_counts_as_unanswered():
    table = FlowTable(syn_timeout=30)
    late = feed(table, [c2s(0.0, seq=1000, flags=TcpFlag.SYN),
                        s2c(31.0, seq=5000, ack=1001, flags=TcpFlag.SYN | TcpFlag.ACK)])
    assert detect_establishment_problem(late, 31_000_000).failure == NO_ANSWER

    table = FlowTable(syn_timeout=30)
    timely = feed(table, [c2s(0.0, seq=1000, flags=TcpFlag.SYN),
                          s2c(1.0, seq=5000, ack=1001, flags=TcpFlag.SYN | TcpFlag.ACK)])
    assert detect_establishment_problem(timely, 100_000_000).failure is None


def test_handshake_rtt_is_twice_the_one_way_delay():
    # 90 ms each way, client ACK one tick after the SYN/ACK
    packets = [
        c2s(0.0, seq=1000, flags=TcpFlag.SYN),
        s2c(0.180, seq=5000, ack=1001, flags=TcpFlag.SYN | TcpFlag.ACK),
        c2s(0.180001, seq=1001, ack=5001),
    ]
    _, flow = _run(packets)
    rtt = estimate_rtt(flow)
    assert rtt.handshake_syn_side == pytest.approx(0.180)
    assert 0.180 <= rtt.handshake_total <= 0.180002


class _Clock:
    def __init__(self, start=1.0, step=0.010):
        self.now, self.step = start, step

    def tick(self, step=None):
        self.now += self.step if step is None else step
        return self.now


def _segment(ts, offset, size=100):
    return c2s(ts, seq=1001 + offset, ack=5001, flags=PSH_ACK, payload=size)


def _server_ack(ts, offset):
    return s2c(ts, seq=5001, ack=1001 + offset)


def _labelled_stream():
    """Hand-labelled stream: (packet, partition bucket or None for non-data)"""
    clock = _Clock()
    out = [(p, None) for p in handshake()]

    def data(offset, bucket, step=None):
        out.append((_segment(clock.tick(step), offset), bucket))

    def ack(offset):
        out.append((_server_ack(clock.tick(), offset), None))

    for k in range(5):
        data(100 * k, 'in_order')
    ack(500)
    data(500, 'in_order')
    data(600, 'in_order')
    data(500, 'retx_plain')
    ack(700)
    data(600, 'retx_spurious')
    for k in (7, 8, 9):
        data(100 * k, 'in_order')
    ack(800)
    for _ in range(3):
        ack(800)
    data(800, 'retx_fast')
    ack(1000)
    data(1100, 'in_order')
    data(1000, 'out_of_order', step=0.001)
    data(1300, 'in_order')
    data(1200, 'in_order')
    ack(1400)
    data(1400, 'in_order')
    data(1500, 'in_order')
    ack(1500)
    for _ in range(2):
        ack(1500)
    data(1500, 'retx_plain')
    ack(1600)
    for k in range(16, 31):
        data(100 * k, 'in_order')
    return out


def test_partition_matches_hand_labels_packet_by_packet():
    stream = _labelled_stream()
    assert len(stream) == 50
    table = FlowTable()
    before = Counter()
    observed = []
    for pkt, _label in stream:
        flow, _ = table.update_flow(pkt)
        after = Counter(flow.tcp.partition_packets)
        delta = after - before
        assert sum(delta.values()) <= 1
        observed.append(next(iter(delta), None))
        before = after
    assert observed == [bucket for _, bucket in stream]
    assert flow.tcp.data_packets == 35


def _synthetic_stream(rng, size):
    """Random data stream with injected retransmissions; returns (packets, expected bucket counts)"""
    clock = _Clock(step=0.001)
    packets = handshake()
    expected = Counter()
    next_offset = acked = 0
    while len(packets) < size:
        roll = rng.random()
        if roll < 0.70:
            packets.append(_segment(clock.tick(), next_offset))
            next_offset += 100
            expected['in_order'] += 1
        elif roll < 0.80:
            if acked < next_offset:
                acked = next_offset
                packets.append(_server_ack(clock.tick(), acked))
        elif roll < 0.87:
            if acked >= 100:
                packets.append(_segment(clock.tick(), acked - 100))
                expected['retx_spurious'] += 1
        elif roll < 0.94:
            if next_offset > acked:
                packets.append(_segment(clock.tick(), acked))
                expected['retx_plain'] += 1
        elif next_offset > acked:
            packets.extend(_server_ack(clock.tick(), acked) for _ in range(3))
            packets.append(_segment(clock.tick(), acked))
            expected['retx_fast'] += 1
    return packets, expected


def test_synthetic_retransmission_partition_covers_every_data_packet():
    packets, expected = _synthetic_stream(random.Random(5), 10_000)
    assert len(packets) >= 10_000
    _, flow = _run(packets)
    conn = flow.tcp

    assert conn.data_packets == sum(expected.values())
    assert {b: conn.partition_packets[b] for b in PARTITION_BUCKETS} == {b: expected[b] for b in PARTITION_BUCKETS}
    assert all(expected[b] > 0 for b in ('in_order', 'retx_plain', 'retx_fast', 'retx_spurious'))

    table = spreading_table([summarize_flow(flow, None, ServiceDb())])
    assert table.total_count == conn.data_packets
    assert sum(Fraction(r.count, table.total_count) for r in table.rows) == 1
    # each row rounds on its own
    total = sum((r.percent_by_count for r in table.rows), Decimal('0.00'))
    assert abs(total - Decimal('100.00')) <= Decimal('0.01') * len(table.rows)


def test_trace_without_ecn_has_no_flag_evidence():
    stream = [pkt for pkt, _ in _labelled_stream()]
    _, flow = _run(stream)
    assert derive_congestion_events(flow).flag_count == 0
    assert flow.tcp.flag_counts['ECE'] == 0
    assert flow.tcp.flag_counts['CWR'] == 0

    stream.append(c2s(5.0, seq=1001 + 3100, ack=5001, flags=PSH_ACK | TcpFlag.CWR, payload=100))
    _, flow = _run(stream)
    assert derive_congestion_events(flow).flag_count > 0
    assert flow.tcp.flag_counts['CWR'] == 1
