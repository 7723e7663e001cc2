"""Console logging setup"""

import logging
import os
import sys

import colorlog

LOG_FORMAT = "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s"
PLAIN_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"

LEVELS = {0: logging.WARNING, 1: logging.INFO}


def setup_logging(verbosity: int = 0, color: bool = True) -> logging.Logger:
    """
    Install a single stderr handler on the root logger

    Args:
        verbosity: 0 warnings only, 1 progress, 2 and above debug
        color: colourise level names when stderr is a terminal

    Returns:
        The configured root logger
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    use_color = color and sys.stderr.isatty() and not os.getenv('NO_COLOR')
    if use_color:
        handler.setFormatter(colorlog.ColoredFormatter(
            LOG_FORMAT,
            datefmt="%H:%M:%S",
            log_colors={
                'DEBUG': 'cyan',
                'INFO': 'green',
                'WARNING': 'yellow',
                'ERROR': 'red',
                'CRITICAL': 'bold_red',
            },
        ))
    else:
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT, datefmt="%H:%M:%S"))

    root.addHandler(handler)
    root.setLevel(LEVELS.get(verbosity, logging.DEBUG))
    return root
