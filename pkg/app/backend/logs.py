"""
Structured JSON logging

One JSON object per line with timestamp, level, logger, event, message and
a small ctx object. Callers pass `event` and `ctx` through `extra`.
"""
import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from .settings import log_level

_configured = False


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname.lower(),
            "logger": record.name,
            "event": getattr(record, "event", record.funcName),
            "message": record.getMessage(),
        }
        ctx = getattr(record, "ctx", None)
        if ctx:
            payload["ctx"] = ctx
        if record.exc_info:
            payload["error_class"] = record.exc_info[0].__name__
        return json.dumps(payload, default=str)


def configure_logging(level: Optional[str] = None) -> None:
    """Install the JSON handler on the package root logger (idempotent)"""
    global _configured
    root = logging.getLogger("wordperc")
    root.setLevel((level or log_level()).upper())
    if _configured:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonFormatter())
    root.addHandler(handler)
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(f"wordperc.{name}")


def log_event(logger: logging.Logger, level: int, event: str, message: str, **ctx: Any) -> None:
    logger.log(level, message, extra={"event": event, "ctx": ctx})
