"""Prefix-preserving address anonymization and trace rewriting"""

from .cryptopan import AnonKey, Anonymizer, BadKeyLength, new_anonymizer, anonymize_addr
from .rewriter import WriteFailure, anonymize_trace, adjust_checksum, transport_checksum

__all__ = [
    'AnonKey', 'Anonymizer', 'BadKeyLength', 'new_anonymizer', 'anonymize_addr',
    'WriteFailure', 'anonymize_trace', 'adjust_checksum', 'transport_checksum',
]
