"""TCP option parsing"""

from typing import List, Optional, Tuple

import dpkt

from .errors import MalformedOption
from .records import TcpOptions

# fixed total lengths (kind + length + value) for the options we decode
FIXED_LENGTHS = {
    dpkt.tcp.TCP_OPT_MSS: 4,
    dpkt.tcp.TCP_OPT_WSCALE: 3,
    dpkt.tcp.TCP_OPT_SACKOK: 2,
    dpkt.tcp.TCP_OPT_TIMESTAMP: 10,
}

MAX_WINDOW_SHIFT = 14


def decode_tcp_options(raw: bytes, strict: bool = False) -> TcpOptions:
    """
    Decode the option region of a TCP header

    Args:
        raw: bytes between the fixed 20-byte header and the data offset
        strict: raise MalformedOption instead of returning a partial set

    Returns:
        TcpOptions with every option parsed before End-of-Options or the first
        malformed option
    """
    mss: Optional[int] = None
    wscale: Optional[int] = None
    sack_ok = False
    sack_blocks: List[Tuple[int, int]] = []
    timestamps: Optional[Tuple[int, int]] = None
    unknown: List[int] = []
    partial = False

    i = 0
    while i < len(raw):
        kind = raw[i]
        if kind == dpkt.tcp.TCP_OPT_EOL:
            break
        if kind == dpkt.tcp.TCP_OPT_NOP:
            i += 1
            continue

        if i + 1 >= len(raw):
            partial = True
            break
        length = raw[i + 1]
        expected = FIXED_LENGTHS.get(kind)
        if length < 2 or i + length > len(raw) or (expected is not None and length != expected):
            partial = True
            break

        value = raw[i + 2:i + length]
        if kind == dpkt.tcp.TCP_OPT_MSS:
            mss = int.from_bytes(value, 'big')
        elif kind == dpkt.tcp.TCP_OPT_WSCALE:
            wscale = min(value[0], MAX_WINDOW_SHIFT)
        elif kind == dpkt.tcp.TCP_OPT_SACKOK:
            sack_ok = True
        elif kind == dpkt.tcp.TCP_OPT_TIMESTAMP:
            timestamps = (int.from_bytes(value[:4], 'big'), int.from_bytes(value[4:], 'big'))
        elif kind == dpkt.tcp.TCP_OPT_SACK:
            if len(value) % 8:
                partial = True
                break
            sack_blocks.extend(
                (int.from_bytes(value[j:j + 4], 'big'), int.from_bytes(value[j + 4:j + 8], 'big'))
                for j in range(0, len(value), 8)
            )
        else:
            unknown.append(kind)
        i += length

    if partial and strict:
        raise MalformedOption(f"option kind {raw[i]} malformed at option byte {i}")

    return TcpOptions(
        mss=mss,
        window_scale=wscale,
        sack_permitted=sack_ok,
        sack_blocks=tuple(sack_blocks),
        timestamps=timestamps,
        unknown=tuple(unknown),
        partial=partial,
    )
