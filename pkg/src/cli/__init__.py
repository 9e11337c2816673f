from .app import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, build_parser, main, run
from .context import RunContext

__all__ = [
    "EXIT_CONFIG",
    "EXIT_OK",
    "EXIT_RUNTIME",
    "build_parser",
    "main",
    "run",
    "RunContext",
]
