"""Canonical bidirectional flow keys"""

from dataclasses import dataclass
from typing import Tuple

from capture.records import PacketRecord

Endpoint = Tuple[int, int]  # (address, port)


@dataclass(frozen=True, order=True)
class FlowKey:
    """5-tuple with the numerically smaller (address, port) endpoint first"""
    addr_lo: int
    port_lo: int
    addr_hi: int
    port_hi: int
    protocol: int

    @property
    def endpoints(self) -> Tuple[Endpoint, Endpoint]:
        return (self.addr_lo, self.port_lo), (self.addr_hi, self.port_hi)


def packet_endpoints(pkt: PacketRecord) -> Tuple[Endpoint, Endpoint]:
    """(source, destination) endpoints; protocols without ports use port 0"""
    return (pkt.src_addr, pkt.src_port or 0), (pkt.dst_addr, pkt.dst_port or 0)


def flow_key(pkt: PacketRecord) -> FlowKey:
    """Direction-independent key of a packet"""
    a, b = packet_endpoints(pkt)
    lo, hi = (a, b) if a <= b else (b, a)
    return FlowKey(lo[0], lo[1], hi[0], hi[1], pkt.protocol)
