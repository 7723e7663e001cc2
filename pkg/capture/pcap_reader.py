"""Classic pcap reader with a bounded timestamp reorder buffer"""

import heapq
import logging
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, List, Optional, Tuple

from .decoder import FrameKind, decode_frame
from .errors import BadMagic, CorruptRecord, TraceUnreadable, TruncatedHeader, UnsupportedLinkType
from .records import CaptureMeta, IngestStats, LinkType, PacketRecord, TimestampResolution

logger = logging.getLogger(__name__)

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
DEFAULT_REORDER_BUFFER = 128

# magic as read little-endian -> (byte order, resolution)
MAGICS = {
    0xa1b2c3d4: ('<', TimestampResolution.MICRO),
    0xd4c3b2a1: ('>', TimestampResolution.MICRO),
    0xa1b23c4d: ('<', TimestampResolution.NANO),
    0x4d3cb2a1: ('>', TimestampResolution.NANO),
}


@dataclass(frozen=True)
class RawRecord:
    """One pcap record exactly as stored in the file"""
    offset: int
    header: bytes
    data: bytes
    ts_us: int


def parse_global_header(header: bytes) -> CaptureMeta:
    """
    Validate and decode the 24-byte pcap global header

    Raises:
        TruncatedHeader: fewer than 24 bytes
        BadMagic: unknown magic number
        UnsupportedLinkType: link type other than Ethernet/raw IP
    """
    if len(header) < GLOBAL_HEADER_LEN:
        raise TruncatedHeader(f"file holds {len(header)} bytes, pcap global header needs {GLOBAL_HEADER_LEN}")

    magic = struct.unpack('<I', header[:4])[0]
    if magic not in MAGICS:
        raise BadMagic(f"not a pcap file (magic 0x{magic:08x})")
    order, resolution = MAGICS[magic]

    major, minor, _zone, _sigfigs, snaplen, network = struct.unpack(order + 'HHiIII', header[4:24])
    try:
        link_type = LinkType(network & 0x0FFFFFFF)
    except ValueError:
        raise UnsupportedLinkType(f"link type {network} is neither Ethernet (1) nor raw IP (101)") from None

    return CaptureMeta(
        link_type=link_type,
        snap_length=snaplen if snaplen > 0 else 262144,
        timestamp_resolution=resolution,
        byte_order=order,
        version=(major, minor),
    )


class PcapReader:
    """
    Reader over one classic pcap file

    Yields decoded IPv4 PacketRecords in timestamp order, holding up to
    `reorder_buffer` packets to repair small inversions. Non-IPv4 frames
    are counted in `stats` and skipped.
    """

    def __init__(self, path: str, reorder_buffer: int = DEFAULT_REORDER_BUFFER):
        """
        Open a trace and read its global header

        Args:
            path: pcap file path
            reorder_buffer: packets held back for timestamp sorting (0 disables)

        Raises:
            TraceUnreadable: the file cannot be opened or read
        """
        self.path = str(path)
        self.reorder_buffer = max(0, reorder_buffer)
        self.stats = IngestStats()

        self._file: Optional[BinaryIO] = None
        try:
            self._file = open(self.path, 'rb')
            self.global_header = self._file.read(GLOBAL_HEADER_LEN)
        except OSError as e:
            self.close()
            raise TraceUnreadable(f"{self.path}: {e.strerror or e}") from e
        try:
            self.meta = parse_global_header(self.global_header)
        except Exception:
            self.close()
            raise

        self._record_fmt = self.meta.byte_order + 'IIII'
        self._offset = GLOBAL_HEADER_LEN
        self._heap: List[Tuple[int, int, PacketRecord]] = []
        self._seq = 0
        self._last_ts: Optional[int] = None
        self._eof = False
        self._warned = False
        logger.info("Opened %s (%s, %s timestamps, snaplen %d)", self.path,
                    self.meta.link_type.name, self.meta.timestamp_resolution.value,
                    self.meta.snap_length)

    def close(self):
        """Release the file handle"""
        if self._file:
            self._file.close()
            self._file = None

    def __enter__(self):
        """Context manager entry"""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit"""
        self.close()

    def __iter__(self) -> Iterator[PacketRecord]:
        while True:
            pkt = self.next_packet()
            if pkt is None:
                return
            yield pkt

    def read_raw(self) -> Optional[RawRecord]:
        """
        Read the next record verbatim, in file order

        Returns:
            The record, or None at a clean end of file

        Raises:
            CorruptRecord: partial record header or data running past end of file
        """
        start = self._offset
        header = self._file.read(RECORD_HEADER_LEN)
        if not header:
            return None
        if len(header) < RECORD_HEADER_LEN:
            raise CorruptRecord(start, f"partial record header ({len(header)} of {RECORD_HEADER_LEN} bytes)")

        ts_sec, ts_frac, incl_len, _orig_len = struct.unpack(self._record_fmt, header)
        data = self._file.read(incl_len)
        if len(data) < incl_len:
            raise CorruptRecord(start, f"record claims {incl_len} bytes, {len(data)} remain")
        self._offset += RECORD_HEADER_LEN + incl_len

        if self.meta.timestamp_resolution == TimestampResolution.NANO:
            ts_frac //= 1000
        return RawRecord(offset=start, header=header, data=data, ts_us=ts_sec * 1_000_000 + ts_frac)

    def iter_raw(self) -> Iterator[RawRecord]:
        while True:
            raw = self.read_raw()
            if raw is None:
                return
            yield raw

    def account(self, kind: FrameKind, record: Optional[PacketRecord]):
        """Update IngestStats for one frame"""
        self.stats.packets_total += 1
        if kind == FrameKind.IPV4:
            self.stats.packets_ipv4 += 1
            self.stats.bytes_ipv4 += record.ip_total_length
            if record.fragment:
                self.stats.fragments += 1
        elif kind == FrameKind.IPV6:
            self.stats.packets_ipv6_skipped += 1
        elif kind == FrameKind.NON_IP:
            self.stats.packets_non_ip_skipped += 1
        elif kind == FrameKind.TRUNCATED:
            self.stats.packets_truncated += 1
        else:
            self.stats.decode_errors += 1

    def _read_decoded(self) -> Optional[PacketRecord]:
        """Next IPv4 record in file order, skipping everything else"""
        while True:
            raw = self.read_raw()
            if raw is None:
                return None
            kind, record = decode_frame(raw.data, raw.ts_us, self.meta.link_type)
            self.account(kind, record)
            if record is not None:
                return record

    def next_packet(self) -> Optional[PacketRecord]:
        """
        Next IPv4 packet in timestamp order

        Returns:
            A PacketRecord, or None once the trace is exhausted
        """
        while not self._eof and len(self._heap) <= self.reorder_buffer:
            record = self._read_decoded()
            if record is None:
                self._eof = True
                break
            if self._last_ts is not None and record.ts_us < self._last_ts:
                # too late for the buffer: pass through
                self.stats.monotonicity_violations += 1
                logger.debug("Timestamp went backwards by %d us in %s",
                             self._last_ts - record.ts_us, self.path)
                return record
            heapq.heappush(self._heap, (record.ts_us, self._seq, record))
            self._seq += 1

        if not self._heap:
            if self.stats.monotonicity_violations and not self._warned:
                logger.warning("%s: %d packets arrived beyond the reorder buffer",
                               self.path, self.stats.monotonicity_violations)
                self._warned = True
            return None

        ts_us, _, record = heapq.heappop(self._heap)
        self._last_ts = ts_us
        return record


def open_trace(path: str, reorder_buffer: int = DEFAULT_REORDER_BUFFER) -> Tuple[CaptureMeta, PcapReader]:
    """
    Open a pcap trace

    Returns:
        (metadata, reader handle); the handle yields packets via next_packet()
    """
    reader = PcapReader(path, reorder_buffer=reorder_buffer)
    return reader.meta, reader


def next_packet(handle: PcapReader) -> Optional[PacketRecord]:
    """Next decodable IPv4 packet from `handle`, or None at end of trace"""
    return handle.next_packet()
