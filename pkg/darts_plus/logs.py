import logging
import os

from dotenv import load_dotenv

LOG_LEVEL_ENV = "DARTS_PLUS_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_configured = False


def configure_logging(level: str | None = None) -> None:
    """Set up the root darts_plus logger once, honouring .env and the environment."""
    global _configured
    load_dotenv()
    level = (level or os.environ.get(LOG_LEVEL_ENV, "INFO")).upper()
    root = logging.getLogger("darts_plus")
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(level)


def get_logger(name: str) -> logging.Logger:
    if not name.startswith("darts_plus"):
        name = f"darts_plus.{name}"
    return logging.getLogger(name)
