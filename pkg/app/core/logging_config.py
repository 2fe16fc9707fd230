#!/usr/bin/env python
"""Logging configuration for RMSup."""

import logging
import json
from logging.handlers import RotatingFileHandler
from pathlib import Path
from contextvars import ContextVar
from typing import Optional

from app.core.config import LOG_BACKUP_COUNT, LOG_DIR, LOG_LEVEL, LOG_MAX_BYTES


# Context variables for task-scoped logging (one scene × method per task)
scene_seed_var: ContextVar[str] = ContextVar("scene_seed", default="-")
method_var: ContextVar[str] = ContextVar("method", default="-")


class ContextFilter(logging.Filter):
    """Injects the current scene/method context vars into log records."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.scene_seed = scene_seed_var.get()
        record.method = method_var.get()
        return True


class JSONFormatter(logging.Formatter):
    """Formatter that outputs logs in structured JSON."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "module": record.module,
            "scene_seed": getattr(record, "scene_seed", "unknown"),
            "method": getattr(record, "method", "unknown"),
            "message": record.getMessage(),
        }

        # Include any custom extra fields
        if record.__dict__.get("extra", None):
            log_data.update(record.__dict__["extra"])

        return json.dumps(log_data)


_configured = False


def configure_logging(log_dir: Optional[str] = None) -> None:
    """Configure the logging system with JSON-lines output. Idempotent."""
    global _configured
    if _configured:
        return

    logs_dir = Path(log_dir or LOG_DIR)
    logs_dir.mkdir(parents=True, exist_ok=True)

    log_file = logs_dir / "rmsup.jsonl"  # JSON lines file

    file_handler = RotatingFileHandler(
        filename=str(log_file),
        maxBytes=LOG_MAX_BYTES,
        backupCount=LOG_BACKUP_COUNT,
    )
    file_handler.setFormatter(JSONFormatter())
    file_handler.addFilter(ContextFilter())

    root_logger = logging.getLogger()
    root_logger.setLevel(LOG_LEVEL)
    root_logger.addHandler(file_handler)
    _configured = True


# App-level logger
logger = logging.getLogger("RMSupLogger")
