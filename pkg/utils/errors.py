"""Exception roots shared by every package"""


class ToolkitError(Exception):
    """Base class for every error raised on purpose by tcpmetro"""


class ConfigError(ToolkitError):
    """Bad usage or configuration; the CLI exits with status 1"""


class DataError(ToolkitError):
    """Unusable input data or failed output; the CLI exits with status 2"""
