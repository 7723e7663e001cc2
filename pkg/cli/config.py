"""Run configuration: defaults, TOML file, environment, then command-line flags"""

import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Mapping, Optional, Tuple

from analytics import AnalysisSettings, NonPositiveBin
from anon import AnonKey
from classify import GeoDb, ParseError, PrefixConfig, ServiceDb, load_geo_db, load_prefix_config, load_services_db
from utils.errors import ConfigError

KEY_ENV_VAR = "TCPMETRO_ANON_KEY_HEX"
FORMATS = ("csv", "text")
RATE_SCALES = ("log", "linear")

_TUPLE_KEYS = {'inputs', 'lan', 'man', 'formats'}


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one command-line run; the key never appears in repr or fingerprint"""
    inputs: Tuple[str, ...] = ()
    prefix_file: Optional[str] = None
    lan: Tuple[str, ...] = ()
    man: Tuple[str, ...] = ()
    geo_db: Optional[str] = None
    services: Optional[str] = None
    anon_key_hex: Optional[str] = field(default=None, repr=False)
    idle_timeout: float = 60.0
    fin_linger: float = 2.0
    reorder_buffer: int = 128
    reorder_window_ms: float = 3.0
    correlation_window: float = 1.0
    syn_timeout: float = 30.0
    bin_width: float = 3.0
    other_threshold: float = 1.0
    rate_scale: str = "log"
    out: str = "report"
    formats: Tuple[str, ...] = FORMATS
    jobs: int = 1

    def validate(self, need_key: bool = False) -> 'RunConfig':
        """
        Check files and numeric ranges

        Raises:
            ConfigError: missing file, bad value or missing key
        """
        for name in ('prefix_file', 'geo_db', 'services'):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{name} file not found: {path}")
        for path in self.inputs:
            if not os.path.isfile(path):
                raise ConfigError(f"input file not found: {path}")

        if not self.bin_width > 0:
            raise NonPositiveBin(f"bin_width must be positive, got {self.bin_width}")
        for name in ('idle_timeout', 'correlation_window', 'syn_timeout'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ('fin_linger', 'reorder_window_ms', 'other_threshold', 'reorder_buffer'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must not be negative, got {getattr(self, name)}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if self.rate_scale not in RATE_SCALES:
            raise ConfigError(f"rate_scale must be one of {', '.join(RATE_SCALES)}")
        if not self.formats or any(f not in FORMATS for f in self.formats):
            raise ConfigError(f"formats must be drawn from {', '.join(FORMATS)}")
        if need_key:
            self.anon_key()
        return self

    def anon_key(self) -> AnonKey:
        """
        Raises:
            ConfigError: no key configured
            BadKeyLength: key is not 32 hex characters
        """
        if not self.anon_key_hex:
            raise ConfigError(f"no anonymization key: set {KEY_ENV_VAR} or anon_key_hex in the config file")
        return AnonKey.from_hex(self.anon_key_hex)

    def fingerprint(self) -> str:
        """SHA-256 of the analysis settings; database files are hashed by content"""
        settings = asdict(self)
        for name in ('anon_key_hex', 'inputs', 'out', 'jobs'):
            settings.pop(name)
        for name in ('prefix_file', 'geo_db', 'services'):
            if settings[name] is not None:
                settings[name] = _content_hash(settings[name])
        canonical = json.dumps(settings, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def prefix_config(self) -> PrefixConfig:
        if self.prefix_file and (self.lan or self.man):
            raise ConfigError("give prefixes either inline (--lan/--man) or with --prefix-file, not both")
        if self.lan:
            try:
                return PrefixConfig.from_strings(self.lan, self.man)
            except ParseError as e:
                raise ConfigError(str(e)) from None
        if self.prefix_file:
            return load_prefix_config(self.prefix_file)
        raise ConfigError("no LAN prefixes: use --lan, --prefix-file or the config file")

    def analysis_settings(self) -> AnalysisSettings:
        """Load the databases and bundle everything a trace worker needs"""
        geo: Optional[GeoDb] = load_geo_db(self.geo_db) if self.geo_db else None
        services = load_services_db(self.services) if self.services else ServiceDb()
        return AnalysisSettings(
            prefixes=self.prefix_config(),
            anon_key=self.anon_key(),
            geo=geo,
            services=services,
            idle_timeout=self.idle_timeout,
            fin_linger=self.fin_linger,
            reorder_buffer=self.reorder_buffer,
            reorder_window_ms=self.reorder_window_ms,
            correlation_window=self.correlation_window,
            syn_timeout=self.syn_timeout,
        )


def _content_hash(path: str) -> str:
    with open(path, 'rb') as f:
        return hashlib.sha256(f.read()).hexdigest()


def _coerce(name: str, value, expected):
    """Check a config-file value against the field default's type"""
    if name in _TUPLE_KEYS:
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"config key {name} must be a list of strings")
        return tuple(value)
    if isinstance(expected, bool) or expected is None or isinstance(expected, str):
        if not isinstance(value, str):
            raise ConfigError(f"config key {name} must be a string")
        return value
    if isinstance(expected, int) and not isinstance(expected, bool):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"config key {name} must be an integer")
        return value
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"config key {name} must be a number")
    return float(value)


def load_config_file(path: str) -> Dict:
    """
    Read a TOML config file into RunConfig keyword arguments

    Raises:
        ConfigError: unreadable file, bad TOML, unknown key or wrong type
    """
    try:
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid config {path}: {e}") from None

    defaults = {f.name: f.default for f in fields(RunConfig)}
    known = set(defaults) - {'inputs'}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return {name: _coerce(name, value, defaults[name]) for name, value in data.items()}


def build_run_config(overrides: Mapping, config_path: Optional[str] = None,
                     env: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Merge defaults, the config file, the environment key and flag overrides

    Args:
        overrides: flag values; None entries are ignored
        config_path: optional TOML file
        env: environment (defaults to os.environ)
    """
    env = os.environ if env is None else env
    cfg = RunConfig()
    if config_path:
        cfg = replace(cfg, **load_config_file(config_path))
    key = env.get(KEY_ENV_VAR)
    if key:
        cfg = replace(cfg, anon_key_hex=key)
    flags = {k: (tuple(v) if k in _TUPLE_KEYS else v) for k, v in overrides.items() if v is not None}
    return replace(cfg, **flags)
