"""Transport protocol census labels"""

from capture.records import PacketRecord

TRANSPORT_LABELS = {1: "ICMP", 2: "IGMP", 6: "TCP", 17: "UDP"}


def transport_label(protocol: int) -> str:
    return TRANSPORT_LABELS.get(protocol, f"Other({protocol})")


def classify_transport(pkt: PacketRecord) -> str:
    """ICMP, IGMP, TCP, UDP or Other(n) from the IPv4 protocol field"""
    return transport_label(pkt.protocol)
