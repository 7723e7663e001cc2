"""Trace ingest: classic pcap reading and IPv4 header decoding"""

from .errors import (IngestError, TraceUnreadable, BadMagic, UnsupportedLinkType, TruncatedHeader,
                     CorruptRecord, MalformedOption)
from .records import (CaptureMeta, PacketRecord, IngestStats, TcpOptions, TcpFlag,
                      LinkType, TimestampResolution, FLAG_NAMES)
from .tcp_options import decode_tcp_options
from .decoder import FrameKind, decode_frame, locate_ip
from .pcap_reader import PcapReader, RawRecord, open_trace, next_packet

__all__ = [
    'IngestError', 'TraceUnreadable', 'BadMagic', 'UnsupportedLinkType', 'TruncatedHeader', 'CorruptRecord',
    'MalformedOption', 'CaptureMeta', 'PacketRecord', 'IngestStats', 'TcpOptions', 'TcpFlag',
    'LinkType', 'TimestampResolution', 'FLAG_NAMES', 'decode_tcp_options', 'FrameKind',
    'decode_frame', 'locate_ip', 'PcapReader', 'RawRecord', 'open_trace', 'next_packet',
]
