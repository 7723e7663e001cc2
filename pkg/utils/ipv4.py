"""IPv4 address helpers working on 32-bit unsigned integers"""

import ipaddress
from typing import Union

MASK32 = 0xFFFFFFFF


def ip_to_int(addr: Union[str, bytes, int]) -> int:
    """Convert dotted-quad text, 4 packed bytes or an int to a 32-bit int"""
    if isinstance(addr, int):
        if not 0 <= addr <= MASK32:
            raise ValueError(f"not a 32-bit address: {addr}")
        return addr
    if isinstance(addr, (bytes, bytearray)):
        if len(addr) != 4:
            raise ValueError("packed IPv4 address must be 4 bytes")
        return int.from_bytes(addr, 'big')
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    """Dotted-quad text for a 32-bit int"""
    return str(ipaddress.IPv4Address(value))


def common_prefix_length(a: int, b: int) -> int:
    """Number of leading bits two addresses share (32 when equal)"""
    return 32 - ((a ^ b) & MASK32).bit_length()


def parse_cidr(text: str) -> ipaddress.IPv4Network:
    """
    Parse a CIDR block, rejecting host bits set past the prefix

    Raises:
        ValueError: text is not a well-formed IPv4 network
    """
    return ipaddress.IPv4Network(text.strip(), strict=True)
