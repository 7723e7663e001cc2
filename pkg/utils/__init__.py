"""Shared helpers: errors, IPv4 arithmetic and logging setup"""

from .errors import ToolkitError, ConfigError, DataError
from .ipv4 import ip_to_int, int_to_ip, common_prefix_length, parse_cidr
from .log import setup_logging

__version__ = "1.0.0"

__all__ = [
    'ToolkitError', 'ConfigError', 'DataError',
    'ip_to_int', 'int_to_ip', 'common_prefix_length', 'parse_cidr',
    'setup_logging', '__version__',
]
