"""Shared rich console and logger wiring."""

import logging

from rich.console import Console
from rich.logging import RichHandler

from config.settings import settings


console = Console()

_configured = False


def get_logger(name: str) -> logging.Logger:
    """Return a logger routed through rich at the configured level."""
    global _configured
    if not _configured:
        handler = RichHandler(console=Console(stderr=True), show_path=False)
        root = logging.getLogger("hardy")
        root.addHandler(handler)
        root.setLevel(settings.log_level.upper())
        root.propagate = False
        _configured = True
    if not name.startswith("hardy"):
        name = f"hardy.{name}"
    return logging.getLogger(name)
