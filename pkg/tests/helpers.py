"""Packet, frame and pcap builders shared by the tests"""

import socket
import struct
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import dpkt

from capture.records import PacketRecord, TcpFlag, TcpOptions
from utils.ipv4 import ip_to_int

CLIENT = ('10.0.0.1', 40000)
SERVER = ('198.51.100.7', 80)

TEST_KEY_HEX = "000102030405060708090a0b0c0d0e0f"

ETH_IP = 0x0800
ETH_IP6 = 0x86DD
ETH_ARP = 0x0806

Record = Tuple[int, bytes]  # (timestamp us, frame)


# -- decoded records ----------------------------------------------------------

def tcp_record(ts: float, src: Tuple[str, int], dst: Tuple[str, int], seq: int = 0, ack: int = 0,
               flags: int = TcpFlag.ACK, payload: int = 0, win: int = 65535,
               wscale: Optional[int] = None) -> PacketRecord:
    return PacketRecord(
        ts_us=int(round(ts * 1_000_000)),
        src_addr=ip_to_int(src[0]),
        dst_addr=ip_to_int(dst[0]),
        protocol=6,
        ip_total_length=40 + payload,
        ip_header_length=20,
        captured_length=40 + payload,
        payload_length=payload,
        src_port=src[1],
        dst_port=dst[1],
        tcp_seq=seq % (1 << 32),
        tcp_ack=ack % (1 << 32),
        tcp_flags=int(flags),
        tcp_window=win,
        tcp_options=TcpOptions(window_scale=wscale),
    )


def c2s(ts: float, **kwargs) -> PacketRecord:
    return tcp_record(ts, CLIENT, SERVER, **kwargs)


def s2c(ts: float, **kwargs) -> PacketRecord:
    return tcp_record(ts, SERVER, CLIENT, **kwargs)


def handshake(client_isn: int = 1000, server_isn: int = 5000, t0: float = 0.0,
              client_wscale: Optional[int] = None, server_wscale: Optional[int] = None) -> List[PacketRecord]:
    """SYN at t0, SYN/ACK 180 ms later, ACK 1 ms after that"""
    return [
        c2s(t0, seq=client_isn, flags=TcpFlag.SYN, wscale=client_wscale),
        s2c(t0 + 0.180, seq=server_isn, ack=client_isn + 1, flags=TcpFlag.SYN | TcpFlag.ACK,
            wscale=server_wscale),
        c2s(t0 + 0.181, seq=client_isn + 1, ack=server_isn + 1),
    ]


def udp_record(ts: float, src: Tuple[str, int], dst: Tuple[str, int], size: int = 100) -> PacketRecord:
    return PacketRecord(
        ts_us=int(round(ts * 1_000_000)),
        src_addr=ip_to_int(src[0]),
        dst_addr=ip_to_int(dst[0]),
        protocol=17,
        ip_total_length=size,
        ip_header_length=20,
        captured_length=size,
        payload_length=size - 28,
        src_port=src[1],
        dst_port=dst[1],
    )


def feed(table, packets: Iterable[PacketRecord]):
    """Feed packets to a FlowTable; returns the flow of the last packet"""
    rec = None
    for pkt in packets:
        rec, _ = table.update_flow(pkt)
    return rec


# -- wire bytes ---------------------------------------------------------------

def ipv4_tcp(src: str, dst: str, sport: int, dport: int, seq: int = 0, ack: int = 0,
             flags: int = TcpFlag.ACK, win: int = 65535, payload: bytes = b'', opts: bytes = b'') -> bytes:
    tcp = dpkt.tcp.TCP(sport=sport, dport=dport, seq=seq, ack=ack, flags=int(flags), win=win,
                       opts=opts, data=payload)
    tcp.off = 5 + len(opts) // 4
    ip = dpkt.ip.IP(src=socket.inet_aton(src), dst=socket.inet_aton(dst), p=dpkt.ip.IP_PROTO_TCP,
                    ttl=64, data=tcp)
    ip.len = 20 + len(tcp)
    return bytes(ip)


def ipv4_udp(src: str, dst: str, sport: int, dport: int, payload: bytes = b'') -> bytes:
    udp = dpkt.udp.UDP(sport=sport, dport=dport, data=payload)
    udp.ulen = 8 + len(payload)
    ip = dpkt.ip.IP(src=socket.inet_aton(src), dst=socket.inet_aton(dst), p=dpkt.ip.IP_PROTO_UDP,
                    ttl=64, data=udp)
    ip.len = 20 + len(udp)
    return bytes(ip)


def ipv4_icmp(src: str, dst: str, payload: bytes = b'\x08\x00\x00\x00\x00\x01\x00\x01') -> bytes:
    ip = dpkt.ip.IP(src=socket.inet_aton(src), dst=socket.inet_aton(dst), p=dpkt.ip.IP_PROTO_ICMP,
                    ttl=64, data=payload)
    ip.len = 20 + len(payload)
    return bytes(ip)


def ethernet(payload: bytes, ethertype: int = ETH_IP) -> bytes:
    return b'\x02\x00\x00\x00\x00\x02' + b'\x02\x00\x00\x00\x00\x01' + struct.pack('!H', ethertype) + payload


def ipv6_frame() -> bytes:
    header = struct.pack('!IHBB', 6 << 28, 0, 59, 64) + bytes(15) + b'\x01' + bytes(15) + b'\x02'
    return ethernet(header, ETH_IP6)


def arp_frame() -> bytes:
    return ethernet(bytes(dpkt.arp.ARP()), ETH_ARP)


def pcap_bytes(records: Sequence[Record], link_type: int = 1, big_endian: bool = False,
               nano: bool = False, snaplen: int = 65535, orig_lens: Optional[Sequence[int]] = None) -> bytes:
    order = '>' if big_endian else '<'
    magic = 0xa1b23c4d if nano else 0xa1b2c3d4
    out = [struct.pack(order + 'IHHiIII', magic, 2, 4, 0, 0, snaplen, link_type)]
    for i, (ts_us, frame) in enumerate(records):
        sec, frac = divmod(ts_us, 1_000_000)
        if nano:
            frac *= 1000
        orig = orig_lens[i] if orig_lens else len(frame)
        out.append(struct.pack(order + 'IIII', sec, frac, len(frame), orig))
        out.append(frame)
    return b''.join(out)


def write_pcap(path: Path, records: Sequence[Record], **kwargs) -> Path:
    Path(path).write_bytes(pcap_bytes(records, **kwargs))
    return Path(path)


def sample_trace_records() -> List[Record]:
    """A short mixed trace: one HTTP exchange, a DNS query, a ping, IPv6 and ARP noise"""
    c, s = CLIENT[0], SERVER[0]
    cp, sp = CLIENT[1], SERVER[1]
    frames = [
        (0, ethernet(ipv4_tcp(c, s, cp, sp, seq=1000, flags=TcpFlag.SYN))),
        (180_000, ethernet(ipv4_tcp(s, c, sp, cp, seq=5000, ack=1001, flags=TcpFlag.SYN | TcpFlag.ACK))),
        (181_000, ethernet(ipv4_tcp(c, s, cp, sp, seq=1001, ack=5001))),
        (200_000, ethernet(ipv4_tcp(c, s, cp, sp, seq=1001, ack=5001, flags=TcpFlag.ACK | TcpFlag.PSH,
                                    payload=b'GET / HTTP/1.0\r\n\r\n'))),
        (250_000, ethernet(ipv4_udp(c, '192.0.2.53', 53000, 53, payload=b'\x12\x34' + bytes(30)))),
        (300_000, ethernet(ipv4_icmp(c, '203.0.113.9'))),
        (380_000, ethernet(ipv4_tcp(s, c, sp, cp, seq=5001, ack=1019, flags=TcpFlag.ACK | TcpFlag.PSH,
                                    payload=b'HTTP/1.0 200 OK\r\n\r\nhello'))),
        (400_000, ipv6_frame()),
        (450_000, arp_frame()),
        (500_000, ethernet(ipv4_tcp(c, s, cp, sp, seq=1019, ack=5026, flags=TcpFlag.FIN | TcpFlag.ACK))),
        (680_000, ethernet(ipv4_tcp(s, c, sp, cp, seq=5026, ack=1020, flags=TcpFlag.FIN | TcpFlag.ACK))),
        (681_000, ethernet(ipv4_tcp(c, s, cp, sp, seq=1020, ack=5027))),
    ]
    return frames
