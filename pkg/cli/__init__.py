"""Command-line entry points and run configuration"""

from .config import RunConfig, build_run_config, load_config_file, KEY_ENV_VAR
from .app import run_cli, build_parser, EXIT_OK, EXIT_USAGE, EXIT_DATA

__all__ = [
    'RunConfig', 'build_run_config', 'load_config_file', 'KEY_ENV_VAR',
    'run_cli', 'build_parser', 'EXIT_OK', 'EXIT_USAGE', 'EXIT_DATA',
]
