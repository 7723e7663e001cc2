"""Scope, continent, transport and service classification"""

from .errors import ParseError, OverlapError
from .prefix_trie import PrefixTrie
from .prefixes import (Scope, PrefixConfig, load_prefix_config, classify_scope,
                       is_foreign, remote_address)
from .geo import (GeoDb, load_geo_db, lookup_continent, normalize_continent,
                  continent_counts, CONTINENTS, ALL_CONTINENTS, UNKNOWN)
from .services import (ServiceDb, load_services_db, classify_service, select_server_port,
                       service_for_port, MAIL_PORTS, FIXED_CATEGORIES, OTHER, NON_IDENTIFIED)
from .transport import classify_transport, transport_label

__all__ = [
    'ParseError', 'OverlapError', 'PrefixTrie', 'Scope', 'PrefixConfig', 'load_prefix_config',
    'classify_scope', 'is_foreign', 'remote_address', 'GeoDb', 'load_geo_db', 'lookup_continent',
    'normalize_continent', 'continent_counts', 'CONTINENTS', 'ALL_CONTINENTS', 'UNKNOWN',
    'ServiceDb', 'load_services_db', 'classify_service', 'select_server_port', 'service_for_port',
    'MAIL_PORTS', 'FIXED_CATEGORIES', 'OTHER', 'NON_IDENTIFIED', 'classify_transport',
    'transport_label',
]
