"""Prefix-preserving IPv4 anonymization (Crypto-PAn construction)"""

import functools
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from utils.errors import ConfigError
from utils.ipv4 import MASK32, int_to_ip, ip_to_int

KEY_BYTES = 16
BLOCK = 16
DEFAULT_CACHE_SIZE = 1 << 16

PrefixFunction = Callable[[int, int], int]


class BadKeyLength(ConfigError):
    """Anonymization key is not 128 bits"""


@dataclass(frozen=True)
class AnonKey:
    """128-bit secret seeding the prefix PRF; never printed"""
    key_material: bytes = field(repr=False)

    def __post_init__(self):
        if not isinstance(self.key_material, (bytes, bytearray)) or len(self.key_material) != KEY_BYTES:
            raise BadKeyLength(f"anonymization key must be {KEY_BYTES * 8} bits")

    @classmethod
    def from_hex(cls, text: str) -> 'AnonKey':
        """Build a key from 32 hex characters"""
        text = (text or '').strip()
        if len(text) != KEY_BYTES * 2:
            raise BadKeyLength(f"anon_key_hex must be {KEY_BYTES * 2} hex characters, got {len(text)}")
        try:
            return cls(bytes.fromhex(text))
        except ValueError:
            raise BadKeyLength("anon_key_hex is not valid hexadecimal") from None


class Anonymizer:
    """
    Keyed prefix-preserving address map

    Output bit i equals input bit i XOR prf(input bits before i), so two
    addresses sharing a k-bit prefix map to addresses sharing exactly k bits.
    Immutable after construction; safe to share between threads.
    """

    def __init__(self, aes_key: bytes, pad: bytes, cache_size: int = DEFAULT_CACHE_SIZE,
                 prf: Optional[PrefixFunction] = None):
        """
        Args:
            aes_key: 16-byte AES key
            pad: 16-byte secret pad filling the bits after each prefix
            cache_size: memoized addresses (0 disables the memo)
            prf: replacement prefix function prf(prefix_value, prefix_len) -> bit, for tests
        """
        if len(aes_key) != KEY_BYTES or len(pad) != BLOCK:
            raise BadKeyLength("AES key and pad must both be 16 bytes")
        self._cipher = Cipher(algorithms.AES(bytes(aes_key)), modes.ECB())  # noqa: S305
        self._local = threading.local()
        self._prf = prf

        pad_head = int.from_bytes(pad[:4], 'big')
        self._pad_tail = bytes(pad[4:])
        masks = [(MASK32 >> (32 - p) << (32 - p)) & MASK32 if p else 0 for p in range(32)]
        self._masks = [(mask, pad_head & ~mask & MASK32) for mask in masks]

        if cache_size > 0:
            self._lookup = functools.lru_cache(maxsize=cache_size)(self._compute)
        else:
            self._lookup = self._compute

    @classmethod
    def from_cryptopan_key(cls, key: bytes, **kwargs) -> 'Anonymizer':
        """Classic 32-byte Crypto-PAn key: AES key, then the block whose encryption is the pad"""
        if len(key) != 2 * KEY_BYTES:
            raise BadKeyLength("Crypto-PAn keys are 32 bytes")
        encryptor = Cipher(algorithms.AES(bytes(key[:16])), modes.ECB()).encryptor()  # noqa: S305
        return cls(key[:16], encryptor.update(bytes(key[16:])), **kwargs)

    @classmethod
    def with_prf(cls, prf: PrefixFunction) -> 'Anonymizer':
        """Anonymizer driven by an arbitrary prefix function (test hook)"""
        return cls(bytes(KEY_BYTES), bytes(BLOCK), cache_size=0, prf=prf)

    def _encryptor(self):
        encryptor = getattr(self._local, 'encryptor', None)
        if encryptor is None:
            encryptor = self._cipher.encryptor()
            self._local.encryptor = encryptor
        return encryptor

    def _flip_bits(self, addr: int) -> int:
        """The 32 PRF outputs for every prefix of `addr`, packed MSB first"""
        if self._prf is not None:
            flips = 0
            for p, (mask, _) in enumerate(self._masks):
                flips = (flips << 1) | (self._prf(addr & mask, p) & 1)
            return flips

        tail = self._pad_tail
        blob = b''.join(((addr & mask) | fill).to_bytes(4, 'big') + tail for mask, fill in self._masks)
        out = self._encryptor().update(blob)
        flips = 0
        for p in range(32):
            flips = (flips << 1) | (out[p * BLOCK] >> 7)
        return flips

    def _compute(self, addr: int) -> int:
        return addr ^ self._flip_bits(addr)

    def anonymize(self, addr: int) -> int:
        """Anonymize a 32-bit address"""
        return self._lookup(addr & MASK32)

    def anonymize_str(self, addr: Union[str, int]) -> str:
        """Anonymize and render as dotted quad"""
        return int_to_ip(self.anonymize(ip_to_int(addr)))


def new_anonymizer(key: AnonKey, cache_size: int = DEFAULT_CACHE_SIZE) -> Anonymizer:
    """
    Anonymizer for a 128-bit key

    The pad is the key encrypted under itself, so the whole map follows
    from the 16 secret bytes.
    """
    if not isinstance(key, AnonKey):
        raise BadKeyLength("expected an AnonKey")
    material = bytes(key.key_material)
    encryptor = Cipher(algorithms.AES(material), modes.ECB()).encryptor()  # noqa: S305
    return Anonymizer(material, encryptor.update(material), cache_size=cache_size)


def anonymize_addr(anonymizer: Anonymizer, addr: int) -> int:
    """Prefix-preserving image of `addr`"""
    return anonymizer.anonymize(addr)
