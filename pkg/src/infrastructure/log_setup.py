#!/usr/bin/env python3
from __future__ import annotations

import logging
from typing import Union

from rich.console import Console
from rich.logging import RichHandler

_FORMAT = "%(name)s: %(message)s"


def setup_logging(level: Union[str, int] = "INFO") -> logging.Logger:
    """Route the package loggers to standard error through rich."""
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter(_FORMAT))
    root = logging.getLogger("src")
    root.handlers[:] = [handler]
    root.setLevel(level if isinstance(level, int) else level.upper())
    return root
