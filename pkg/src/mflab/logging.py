"""JSONL structured logging for mflab runs."""

from __future__ import annotations

import logging
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import mpmath
import numpy as np
from pydantic import BaseModel, Field, field_validator

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _jsonable(value: Any) -> Any:
    """Render numeric library types (mpf, mpc, Fraction, numpy) as JSON-safe values."""
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(value, 20)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


class LogEntry(BaseModel):
    """One JSONL record: UTC time, level, message and the call's keyword context."""

    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    level: str = Field(description="One of LEVELS")
    message: str
    context: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        if v.upper() not in LEVELS:
            raise ValueError(f"Invalid log level: {v}")
        return v.upper()

    @field_validator("context")
    @classmethod
    def validate_context(cls, v: Dict[str, Any]) -> Dict[str, Any]:
        return _jsonable(v)


class JSONLHandler(logging.Handler):
    """Appends each record as a LogEntry line to mflab_<timestamp>.jsonl."""

    def __init__(self, log_dir: Path):
        super().__init__()
        self.log_dir = log_dir
        self.log_file = log_dir / f"mflab_{datetime.now():%Y%m%d_%H%M%S}.jsonl"

    def emit(self, record: logging.LogRecord) -> None:
        try:
            entry = LogEntry(
                level=record.levelname,
                message=record.getMessage(),
                context=dict(getattr(record, "context", {}) or {}),
            )
            self.log_dir.mkdir(parents=True, exist_ok=True)
            with self.log_file.open("a", encoding="utf-8") as f:
                f.write(entry.model_dump_json() + "\n")
        except Exception:
            sys.stderr.write(f"Logging error: {record.getMessage()}\n")


class LabLogger:
    """
    Logger whose keyword arguments become the record's JSON context.

    Records go to a JSONL file under `log_dir` (default $MFLAB_LOG_DIR or
    ./logs); warnings and above are echoed to stderr.
    """

    def __init__(self, name: str = "mflab", log_dir: Optional[Path] = None):
        if log_dir is None:
            log_dir = Path(os.environ.get("MFLAB_LOG_DIR", "./logs"))

        self._logger = logging.getLogger(name)
        self._logger.setLevel(logging.INFO)
        self._logger.propagate = False
        for handler in list(self._logger.handlers):
            self._logger.removeHandler(handler)

        self.jsonl_handler = JSONLHandler(log_dir)
        self.jsonl_handler.setLevel(logging.DEBUG)
        self._logger.addHandler(self.jsonl_handler)

        stderr = logging.StreamHandler()
        stderr.setLevel(logging.WARNING)
        stderr.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        self._logger.addHandler(stderr)

    def set_level(self, level: int) -> None:
        self._logger.setLevel(level)

    def _log(self, level: int, message: str, context: Dict[str, Any]) -> None:
        self._logger.log(level, message, extra={"context": context})

    def debug(self, message: str, /, **context: Any) -> None:
        self._log(logging.DEBUG, message, context)

    def info(self, message: str, /, **context: Any) -> None:
        self._log(logging.INFO, message, context)

    def warning(self, message: str, /, **context: Any) -> None:
        self._log(logging.WARNING, message, context)

    def error(self, message: str, /, **context: Any) -> None:
        self._log(logging.ERROR, message, context)

    def critical(self, message: str, /, **context: Any) -> None:
        self._log(logging.CRITICAL, message, context)


def configure_logging(debug: bool = False) -> None:
    """Switch the library logger between INFO and DEBUG."""
    logger.set_level(logging.DEBUG if debug else logging.INFO)


logger = LabLogger()
