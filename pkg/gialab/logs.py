from __future__ import annotations

import logging
import os

# Override with env var GIALAB_LOG_LEVEL, e.g.:
#   export GIALAB_LOG_LEVEL=DEBUG
LOG_LEVEL_ENV = "GIALAB_LOG_LEVEL"
DEFAULT_LEVEL = "INFO"

_FORMAT = "[GIALab] %(levelname)s %(name)s: %(message)s"


def log_level() -> int:
    raw = os.environ.get(LOG_LEVEL_ENV, DEFAULT_LEVEL).strip().upper()
    level = logging.getLevelName(raw)
    return level if isinstance(level, int) else logging.INFO


def setup_logging() -> None:
    root = logging.getLogger("gialab")
    root.setLevel(log_level())
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
