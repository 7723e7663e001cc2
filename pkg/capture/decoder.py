"""Link/IPv4/transport header decoding on top of dpkt"""

from dataclasses import replace
from enum import Enum
from typing import Optional, Tuple

import dpkt

from .records import LinkType, PacketRecord
from .tcp_options import decode_tcp_options

ETH_HEADER_LEN = 14
VLAN_TAG_LEN = 4
IPV4_MIN_HEADER = 20
TCP_MIN_HEADER = 20
UDP_HEADER = 8


class FrameKind(Enum):
    """Where a frame lands in IngestStats"""
    IPV4 = "ipv4"
    IPV6 = "ipv6"
    NON_IP = "non_ip"
    TRUNCATED = "truncated"
    MALFORMED = "malformed"


def locate_ip(frame: bytes, link_type: LinkType) -> Tuple[FrameKind, int]:
    """
    Find the network-layer header inside a captured frame

    One 802.1Q tag is unwrapped; stacked tags count as non-IP.

    Returns:
        (kind, offset of the IP header); offset is meaningful for IPV4 only
    """
    if link_type == LinkType.RAW:
        if not frame:
            return FrameKind.MALFORMED, 0
        version = frame[0] >> 4
        if version == 4:
            return FrameKind.IPV4, 0
        if version == 6:
            return FrameKind.IPV6, 0
        return FrameKind.NON_IP, 0

    try:
        eth = dpkt.ethernet.Ethernet(frame)
    except (dpkt.UnpackError, ValueError):
        return FrameKind.MALFORMED, 0

    tags = getattr(eth, 'vlan_tags', None) or []
    if len(tags) > 1 or getattr(eth, 'mpls_labels', None):
        return FrameKind.NON_IP, 0
    offset = ETH_HEADER_LEN + VLAN_TAG_LEN * len(tags)
    # dpkt keeps the outer ethertype on tagged frames
    ethertype = tags[-1].type if tags else eth.type

    if ethertype == dpkt.ethernet.ETH_TYPE_IP:
        return FrameKind.IPV4, offset
    if ethertype == dpkt.ethernet.ETH_TYPE_IP6:
        return FrameKind.IPV6, offset
    return FrameKind.NON_IP, offset


def decode_frame(frame: bytes, ts_us: int, link_type: LinkType) -> Tuple[FrameKind, Optional[PacketRecord]]:
    """
    Decode one captured frame into a PacketRecord

    Returns:
        (kind, record); record is None unless kind is IPV4
    """
    kind, offset = locate_ip(frame, link_type)
    if kind != FrameKind.IPV4:
        return kind, None
    return decode_ipv4(frame[offset:], ts_us)


def decode_ipv4(buf: bytes, ts_us: int) -> Tuple[FrameKind, Optional[PacketRecord]]:
    """Decode an IPv4 datagram (possibly truncated by the snap length)"""
    if len(buf) < IPV4_MIN_HEADER:
        return FrameKind.TRUNCATED, None
    try:
        ip = dpkt.ip.IP(buf)
    except (dpkt.UnpackError, ValueError):
        # dpkt rejects an IHL below 5 with UnpackError
        return FrameKind.MALFORMED, None

    if ip.v != 4:
        return FrameKind.MALFORMED, None
    ihl = ip.hl * 4
    if ihl < IPV4_MIN_HEADER or ip.len < ihl:
        return FrameKind.MALFORMED, None
    if len(buf) < ihl:
        return FrameKind.TRUNCATED, None

    captured = min(len(buf), ip.len)
    truncated = len(buf) < ip.len
    base = dict(
        ts_us=ts_us,
        src_addr=int.from_bytes(ip.src, 'big'),
        dst_addr=int.from_bytes(ip.dst, 'big'),
        protocol=ip.p,
        ip_total_length=ip.len,
        ip_header_length=ihl,
        captured_length=captured,
        truncated=truncated,
    )

    if ip.offset != 0:
        return FrameKind.IPV4, PacketRecord(payload_length=ip.len - ihl, fragment=True, **base)

    segment = buf[ihl:captured]
    if ip.p == dpkt.ip.IP_PROTO_TCP:
        return _decode_tcp(segment, base)
    if ip.p == dpkt.ip.IP_PROTO_UDP:
        return _decode_udp(segment, base)
    return FrameKind.IPV4, PacketRecord(payload_length=ip.len - ihl, **base)


def _decode_tcp(segment: bytes, base: dict) -> Tuple[FrameKind, Optional[PacketRecord]]:
    if len(segment) < TCP_MIN_HEADER:
        return FrameKind.TRUNCATED, None
    try:
        tcp = dpkt.tcp.TCP(segment)
    except (dpkt.UnpackError, ValueError):
        return FrameKind.MALFORMED, None

    data_offset = tcp.off * 4
    payload = base['ip_total_length'] - base['ip_header_length'] - data_offset
    if data_offset < TCP_MIN_HEADER or payload < 0:
        return FrameKind.MALFORMED, None

    options = decode_tcp_options(segment[TCP_MIN_HEADER:data_offset])
    if len(segment) < data_offset:
        # header-only capture cut inside the options
        options = replace(options, partial=True)

    return FrameKind.IPV4, PacketRecord(
        payload_length=payload,
        src_port=tcp.sport,
        dst_port=tcp.dport,
        tcp_seq=tcp.seq,
        tcp_ack=tcp.ack,
        tcp_flags=tcp.flags,
        tcp_window=tcp.win,
        tcp_options=options,
        **base,
    )


def _decode_udp(segment: bytes, base: dict) -> Tuple[FrameKind, Optional[PacketRecord]]:
    if len(segment) < UDP_HEADER:
        return FrameKind.TRUNCATED, None
    try:
        udp = dpkt.udp.UDP(segment)
    except (dpkt.UnpackError, ValueError):
        return FrameKind.MALFORMED, None

    payload = base['ip_total_length'] - base['ip_header_length'] - UDP_HEADER
    if payload < 0:
        return FrameKind.MALFORMED, None
    return FrameKind.IPV4, PacketRecord(
        payload_length=payload,
        src_port=udp.sport,
        dst_port=udp.dport,
        **base,
    )
