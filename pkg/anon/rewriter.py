"""Whole-trace anonymization: rewrite IPv4 addresses and repair checksums"""

import logging
import struct

import dpkt

from capture.decoder import FrameKind, decode_ipv4, locate_ip
from capture.pcap_reader import PcapReader
from capture.records import IngestStats
from utils.errors import DataError

from .cryptopan import Anonymizer

logger = logging.getLogger(__name__)

# checksum field offset inside the transport header
CHECKSUM_OFFSET = {dpkt.ip.IP_PROTO_TCP: 16, dpkt.ip.IP_PROTO_UDP: 6}


class WriteFailure(DataError):
    """An output file could not be written"""

    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
        self.reason = reason

    def __reduce__(self):
        return type(self), (self.path, self.reason)


def _fold(total: int) -> int:
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def adjust_checksum(checksum: int, old: bytes, new: bytes) -> int:
    """Incremental ones'-complement update for replaced 16-bit words: HC' = ~(~HC + ~m + m')"""
    total = ~checksum & 0xFFFF
    for i in range(0, len(old), 2):
        total += ~int.from_bytes(old[i:i + 2], 'big') & 0xFFFF
        total += int.from_bytes(new[i:i + 2], 'big')
    return ~_fold(total) & 0xFFFF


def transport_checksum(src: bytes, dst: bytes, proto: int, segment: bytes) -> int:
    """Full TCP/UDP checksum over the pseudo-header and a segment whose checksum field is zero"""
    pseudo = src + dst + struct.pack('!BBH', 0, proto, len(segment))
    total = dpkt.in_cksum_add(0, pseudo)
    total = dpkt.in_cksum_add(total, segment)
    return dpkt.in_cksum_done(total)


def rewrite_ipv4(frame: bytearray, ip_offset: int, anonymizer: Anonymizer) -> bool:
    """
    Anonymize one IPv4 datagram in place

    Returns:
        True when the addresses were rewritten
    """
    ip_start = ip_offset
    if len(frame) < ip_start + 20:
        return False
    ihl = (frame[ip_start] & 0x0F) * 4
    total_length = struct.unpack_from('!H', frame, ip_start + 2)[0]
    flags_offset = struct.unpack_from('!H', frame, ip_start + 6)[0]
    proto = frame[ip_start + 9]

    old_addrs = bytes(frame[ip_start + 12:ip_start + 20])
    src = anonymizer.anonymize(int.from_bytes(old_addrs[:4], 'big')).to_bytes(4, 'big')
    dst = anonymizer.anonymize(int.from_bytes(old_addrs[4:], 'big')).to_bytes(4, 'big')
    new_addrs = src + dst
    frame[ip_start + 12:ip_start + 20] = new_addrs

    header_end = ip_start + ihl
    if ihl >= 20 and len(frame) >= header_end:
        frame[ip_start + 10:ip_start + 12] = b'\x00\x00'
        struct.pack_into('!H', frame, ip_start + 10, dpkt.in_cksum(bytes(frame[ip_start:header_end])))

    field_offset = CHECKSUM_OFFSET.get(proto)
    fragment_offset = flags_offset & 0x1FFF
    more_fragments = bool(flags_offset & 0x2000)
    if field_offset is None or fragment_offset != 0 or ihl < 20:
        return True

    cksum_at = header_end + field_offset
    if len(frame) < cksum_at + 2:
        return True
    original = struct.unpack_from('!H', frame, cksum_at)[0]
    # a zero checksum stays zero
    if original == 0:
        return True

    datagram_end = ip_start + total_length
    complete = not more_fragments and len(frame) >= datagram_end and total_length >= ihl
    if complete:
        struct.pack_into('!H', frame, cksum_at, 0)
        updated = transport_checksum(src, dst, proto, bytes(frame[header_end:datagram_end]))
    else:
        updated = adjust_checksum(original, old_addrs, new_addrs)
    if proto == dpkt.ip.IP_PROTO_UDP and updated == 0:
        updated = 0xFFFF
    struct.pack_into('!H', frame, cksum_at, updated)
    return True


def anonymize_trace(in_path: str, out_path: str, anonymizer: Anonymizer) -> IngestStats:
    """
    Copy a pcap trace with every IPv4 address anonymized

    Headers, record order, timestamps and payload bytes are preserved;
    only addresses and the checksums covering them change.

    Returns:
        IngestStats of the input trace

    Raises:
        IngestError: unreadable input
        WriteFailure: output cannot be written
    """
    rewritten = 0
    with PcapReader(in_path, reorder_buffer=0) as reader:
        try:
            out = open(out_path, 'wb')
        except OSError as e:
            raise WriteFailure(out_path, e.strerror or str(e)) from e

        with out:
            try:
                out.write(reader.global_header)
                for raw in reader.iter_raw():
                    frame = bytearray(raw.data)
                    kind, ip_offset = locate_ip(raw.data, reader.meta.link_type)
                    record = None
                    if kind == FrameKind.IPV4:
                        kind, record = decode_ipv4(raw.data[ip_offset:], raw.ts_us)
                        if rewrite_ipv4(frame, ip_offset, anonymizer):
                            rewritten += 1
                    reader.account(kind, record)
                    out.write(raw.header)
                    out.write(frame)
            except OSError as e:
                raise WriteFailure(out_path, e.strerror or str(e)) from e
        stats = reader.stats

    logger.info("Anonymized %s -> %s (%d of %d records rewritten)",
                in_path, out_path, rewritten, stats.packets_total)
    return stats

