"""Service identification from the server port of TCP flows"""

import logging
import re
from typing import Dict, Iterable, Optional, Tuple

from .errors import ParseError

logger = logging.getLogger(__name__)

SSH = "SSH"
DNS = "DNS"
MAIL = "Mail"
HTTP = "HTTP"
HTTPS = "HTTPS"
OTHER = "Other"
NON_IDENTIFIED = "NonIdentified"

MAIL_PORTS = frozenset({25, 110, 143, 465, 587, 993, 995})
FIXED_PORTS = {22: SSH, 53: DNS, 80: HTTP, 443: HTTPS}
FIXED_CATEGORIES = (SSH, DNS, MAIL, HTTP, HTTPS, OTHER, NON_IDENTIFIED)

LINE_PATTERN = re.compile(r'^(?P<name>[^\s/]+)\s+(?P<port>\d+)/(?P<proto>[A-Za-z]+)(?:\s+.*)?$')


class ServiceDb:
    """(port, transport) -> service name map in services-file form"""

    def __init__(self, port_map: Optional[Dict[Tuple[int, str], str]] = None):
        self.port_map: Dict[Tuple[int, str], str] = dict(port_map or {})
        self.mail_ports = MAIL_PORTS

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<services>") -> 'ServiceDb':
        """
        Parse services-file lines (`name port/proto [aliases]`, `#` comments)

        Raises:
            ParseError: a line is not in services-file form
        """
        db = cls()
        for line_no, line in enumerate(lines, start=1):
            text = line.split('#', 1)[0].strip()
            if not text:
                continue
            match = LINE_PATTERN.match(text)
            if not match:
                raise ParseError(source, line_no, f"expected 'name port/proto', got {text!r}")
            port = int(match.group('port'))
            if port > 0xFFFF:
                raise ParseError(source, line_no, f"port {port} out of range")
            key = (port, match.group('proto').lower())
            db.port_map.setdefault(key, match.group('name'))
        return db

    def knows(self, port: int, proto: str = 'tcp') -> bool:
        return (port, proto) in self.port_map

    def name(self, port: int, proto: str = 'tcp') -> Optional[str]:
        return self.port_map.get((port, proto))


def load_services_db(path: str) -> ServiceDb:
    """Load a services file such as /etc/services"""
    try:
        with open(path, 'r', encoding='utf-8', errors='replace') as f:
            db = ServiceDb.from_lines(f, source=str(path))
    except OSError as e:
        raise ParseError(str(path), 0, e.strerror or str(e)) from e
    logger.info("Loaded %d service entries from %s", len(db.port_map), path)
    return db


def select_server_port(flow, db: ServiceDb) -> Optional[int]:
    """
    Server port of a flow

    The destination port of the SYN when one was captured; otherwise the
    smaller of the two ports known to the services db, else the smaller port.
    """
    if flow.server_port is not None:
        return flow.server_port
    ports = sorted(p for p in (flow.key.port_lo, flow.key.port_hi) if p is not None)
    if not ports:
        return None
    for port in ports:
        if db.knows(port):
            return port
    return ports[0]


def service_for_port(port: Optional[int], db: ServiceDb) -> str:
    """Category or named service for a TCP server port"""
    if port is None:
        return NON_IDENTIFIED
    if port in FIXED_PORTS:
        return FIXED_PORTS[port]
    if port in db.mail_ports:
        return MAIL
    name = db.name(port)
    return name if name is not None else NON_IDENTIFIED


def classify_service(flow, db: ServiceDb) -> str:
    """
    Service label of a TCP flow

    Returns:
        SSH, DNS, Mail, HTTP, HTTPS, a services-file name, or NonIdentified
    """
    return service_for_port(select_server_port(flow, db), db)
