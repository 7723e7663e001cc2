import random
from dataclasses import replace

import pytest

from anon import AnonKey, new_anonymizer
from capture import TcpFlag
from classify import ServiceDb
from flows import (END_CLOSED, END_FLUSHED, END_IDLE, EVENT_COLUMNS, FLOW_COLUMNS, FlowTable, event_rows,
                   flow_key, flow_metrics, format_value, read_flow_csv, summarize_flow, write_flow_csv)
from tests.helpers import CLIENT, SERVER, TEST_KEY_HEX, c2s, feed, handshake, s2c, tcp_record, udp_record
from utils.errors import DataError
from utils.ipv4 import int_to_ip


def test_flow_key_is_direction_independent():
    assert flow_key(c2s(0.0)) == flow_key(s2c(1.0))
    assert flow_key(c2s(0.0)) != flow_key(udp_record(0.0, CLIENT, SERVER))


def test_initiator_is_syn_sender_even_when_synack_comes_first():
    table = FlowTable()
    flow = feed(table, [s2c(0.0, seq=5000, ack=1001, flags=TcpFlag.SYN | TcpFlag.ACK), c2s(0.001, seq=1001, ack=5001)])
    assert int_to_ip(flow.initiator[0]) == CLIENT[0]
    assert flow.packets_fwd == 1 and flow.packets_rev == 1
    assert flow.server_port == SERVER[1]


def test_counts_and_direction():
    table = FlowTable()
    flow = feed(table, handshake() + [s2c(0.3, seq=5001, ack=1001, flags=TcpFlag.PSH | TcpFlag.ACK, payload=500)])
    assert flow.packets_fwd == 2 and flow.packets_rev == 2
    assert flow.bytes_fwd == 80 and flow.bytes_rev == 40 + 540
    assert flow.server_port == 80
    assert flow.bidirectional
    assert len(table) == 1


def test_idle_timeout_splits_flows():
    table = FlowTable(idle_timeout=60)
    first, new_first = table.update_flow(udp_record(0.0, CLIENT, ('192.0.2.53', 53)))
    second, new_second = table.update_flow(udp_record(61.0, CLIENT, ('192.0.2.53', 53)))
    assert new_first and new_second and first is not second
    assert first.end_reason == END_IDLE
    assert table.drain_finished() == [first]
    assert table.counters()['flows_expired'] == 1


def test_expire_flows_by_clock():
    table = FlowTable(idle_timeout=10)
    table.update_flow(udp_record(0.0, CLIENT, ('192.0.2.53', 53)))
    assert table.expire_flows(9.0) == []
    (done,) = table.expire_flows(10.0)
    assert done.end_reason == END_IDLE
    assert len(table) == 0


def test_closed_flow_absorbs_stragglers_then_yields_to_new_syn():
    table = FlowTable(fin_linger=2)
    packets = handshake() + [
        c2s(1.0, seq=1001, ack=5001, flags=TcpFlag.FIN | TcpFlag.ACK),
        s2c(1.1, seq=5001, ack=1002, flags=TcpFlag.FIN | TcpFlag.ACK),
        c2s(1.2, seq=1002, ack=5002),
    ]
    closed = feed(table, packets)
    assert closed.close_ts_us == 1_100_000
    assert closed.length == 6

    reused, is_new = table.update_flow(c2s(1.5, seq=90000, flags=TcpFlag.SYN))
    assert is_new and reused is not closed
    assert closed.end_reason == END_CLOSED
    assert reused.flow_id == '0.1'
    assert table.counters()['flows_fin_closed'] == 1


def test_close_linger_expiry_and_flush():
    table = FlowTable(fin_linger=2)
    feed(table, [c2s(0.0, seq=1, flags=TcpFlag.SYN), s2c(0.5, seq=0, ack=2, flags=TcpFlag.RST | TcpFlag.ACK)])
    feed(table, [udp_record(0.6, CLIENT, ('192.0.2.53', 53))])
    (closed,) = table.expire_until(2_600_000)
    assert closed.end_reason == END_CLOSED
    (flushed,) = table.flush(3_000_000)
    assert flushed.end_reason == END_FLUSHED
    assert table.counters() == {'flows_created': 2, 'flows_expired': 0, 'flows_fin_closed': 1,
                                'flows_flushed': 1}


def test_flow_metrics_rate():
    table = FlowTable()
    flow = None
    for i in range(10):
        flow = feed(table, [udp_record(i * 12 / 9, CLIENT, ('192.0.2.53', 53), size=1500)])
    metrics = flow_metrics(flow)
    assert metrics.length_pkts == 10
    assert metrics.bytes_total == 15000
    assert metrics.duration_s == pytest.approx(12.0)
    assert metrics.mean_rate_bits_per_s == pytest.approx(10000.0)


def test_single_packet_flow_has_no_rate():
    table = FlowTable()
    flow = feed(table, [udp_record(1.0, CLIENT, ('192.0.2.53', 53))])
    assert flow_metrics(flow).mean_rate_bits_per_s is None
    assert flow_metrics(flow).duration_s == 0.0


@pytest.fixture
def finished_flow():
    table = FlowTable(labeler=lambda pkt: ('WAN', 'Europe'), trace_no=3)
    feed(table, handshake() + [
        c2s(0.200, seq=1001, ack=5001, flags=TcpFlag.PSH | TcpFlag.ACK, payload=100),
        c2s(0.250, seq=1001, ack=5001, flags=TcpFlag.PSH | TcpFlag.ACK, payload=100),
        s2c(0.380, seq=5001, ack=1101),
    ])
    (flow,) = table.flush(1_000_000)
    return flow


def test_summary_of_tcp_flow(finished_flow):
    anonymizer = new_anonymizer(AnonKey.from_hex(TEST_KEY_HEX))
    summary = summarize_flow(finished_flow, anonymizer, ServiceDb())
    assert summary.flow_id == '3.0'
    assert summary.anonymized
    assert summary.initiator_addr == anonymizer.anonymize_str(CLIENT[0])
    assert summary.responder_port == 80
    assert summary.service == 'HTTP'
    assert (summary.scope, summary.continent) == ('WAN', 'Europe')
    assert summary.end_reason == END_FLUSHED
    assert summary.packets == 6
    assert summary.retx_plain == 1 and summary.in_order == 1
    assert summary.data_bytes == 200
    assert summary.rtt_handshake_ms == pytest.approx(181.0)
    assert summary.rtt_samples == 0
    assert summary.rtt_median_ms is None


def test_summary_without_anonymizer_keeps_raw_addresses(finished_flow):
    summary = summarize_flow(finished_flow, None, ServiceDb())
    assert not summary.anonymized
    assert summary.initiator_addr == CLIENT[0]


def test_event_rows(finished_flow):
    rows = event_rows(finished_flow)
    assert len(EVENT_COLUMNS) == 5
    assert rows == [('3.0', '0.25', 'RetransmissionPlain', 'fwd', 'seq=0 len=100')]


def test_flow_csv_reads_back(tmp_path, finished_flow):
    udp_table = FlowTable()
    feed(udp_table, [udp_record(0.0, CLIENT, ('192.0.2.53', 53)), udp_record(0.5, ('192.0.2.53', 53), CLIENT)])
    summaries = [summarize_flow(finished_flow, None, ServiceDb()),
                 summarize_flow(udp_table.flush()[0], None, ServiceDb())]

    path = tmp_path / 'flows.csv'
    write_flow_csv(str(path), summaries)
    assert path.read_text(encoding='utf-8').splitlines()[0] == ','.join(FLOW_COLUMNS)
    assert read_flow_csv(str(path)) == summaries


def test_format_value():
    assert format_value(None) == ''
    assert format_value(True) == '1'
    assert format_value(0.1) == '0.1'
    assert format_value(7) == '7'


def test_read_flow_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text("a,b\n1,2\n", encoding='utf-8')
    with pytest.raises(DataError):
        read_flow_csv(str(path))
    with pytest.raises(DataError):
        read_flow_csv(str(tmp_path / 'missing.csv'))


ENDPOINTS = [('10.0.0.1', 40000), ('10.0.0.2', 40001), ('198.51.100.7', 80), ('192.0.2.53', 53)]


def _random_trace(rng, count=300):
    """Time-ordered UDP and pure-ACK TCP packets over a handful of endpoint pairs"""
    ts = 0.0
    packets = []
    for _ in range(count):
        ts += rng.choice([0.001, 0.5, 5.0, 45.0, 90.0]) * rng.random()
        src, dst = rng.sample(ENDPOINTS, 2)
        if rng.random() < 0.5:
            packets.append(udp_record(ts, src, dst, size=rng.randint(28, 1500)))
        else:
            packets.append(tcp_record(ts, src, dst, seq=rng.randrange(1 << 32), ack=rng.randrange(1 << 32)))
    return packets


def _swapped(pkt):
    return replace(pkt, src_addr=pkt.dst_addr, dst_addr=pkt.src_addr,
                   src_port=pkt.dst_port, dst_port=pkt.src_port)


def _finished_flows(packets, idle_timeout=60):
    table = FlowTable(idle_timeout=idle_timeout)
    feed(table, packets)
    table.flush()
    return table.drain_finished()


def _shape(flows):
    return sorted((m.length_pkts, m.bytes_total, m.duration_s) for m in map(flow_metrics, flows))


@pytest.mark.parametrize('seed', range(20))
def test_flow_accounting_on_random_traces(seed):
    rng = random.Random(seed)
    packets = _random_trace(rng)
    flows = _finished_flows(packets)

    assert sum(f.length for f in flows) == len(packets)
    assert sum(f.bytes_total for f in flows) == sum(p.ip_total_length for p in packets)

    mirrored = _finished_flows([_swapped(p) for p in packets])
    assert len(mirrored) == len(flows)
    assert _shape(mirrored) == _shape(flows)

    counts = [len(_finished_flows(packets, idle_timeout=t)) for t in (1, 10, 30, 60, 120, 600)]
    assert counts == sorted(counts, reverse=True)
