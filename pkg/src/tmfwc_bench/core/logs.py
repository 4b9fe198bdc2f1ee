from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def configure_logging(verbosity: int = 0, console: Console | None = None) -> None:
    """-v -> INFO, -vv -> DEBUG; warnings only otherwise. Output goes to stderr."""
    level = _LEVELS.get(verbosity, logging.DEBUG)
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=verbosity > 1,
        rich_tracebacks=verbosity > 1,
        markup=False,
    )
    root = logging.getLogger("tmfwc_bench")
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)
