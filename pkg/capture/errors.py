"""Errors raised while opening or reading capture files"""

from utils.errors import DataError


class IngestError(DataError):
    """Base class for trace-ingest failures"""


class BadMagic(IngestError):
    """File does not start with a classic pcap magic number"""


class UnsupportedLinkType(IngestError):
    """Link layer other than Ethernet or raw IP"""


class TruncatedHeader(IngestError):
    """File is shorter than the 24-byte global header"""


class CorruptRecord(IngestError):
    """A record header claims more bytes than the file holds"""

    def __init__(self, offset: int, message: str):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset
        self.message = message

    def __reduce__(self):
        return type(self), (self.offset, self.message)


class MalformedOption(IngestError):
    """A TCP option's declared length runs past the option region"""


class TraceUnreadable(IngestError):
    """The trace file cannot be opened or read"""
