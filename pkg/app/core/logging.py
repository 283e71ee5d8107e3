import logging

from app.core.config import get_settings

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """Install the root handler for a CLI process."""
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)
