#!/usr/bin/env python3

import logging
import os
import sys
import threading
import time
from collections import deque
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [SESSION:%(session_id)s] - %(message)s'

LOG_DEFAULTS = {
    "level": "WARNING",
    "buffer_size": 1000,
    "max_events": 500,
}


class RunLogger:
    def __init__(self, name: str = "jcrsim", log_dir: Optional[str] = None) -> None:
        self.name = name
        self.session_id = f"session_{int(time.time())}_{os.getpid()}"
        self.log_buffer: deque = deque(maxlen=LOG_DEFAULTS["buffer_size"])
        self.numerical_events: List[Dict[str, Any]] = []

        self._buffer_lock = threading.Lock()

        self.logger = logging.getLogger(name)
        level_name = os.getenv("JCRSIM_LOG_LEVEL", LOG_DEFAULTS["level"]).upper()
        self.logger.setLevel(getattr(logging, level_name, logging.WARNING))
        self.logger.propagate = False

        self.log_file: Optional[Path] = None

        if not self.logger.handlers:
            stream = logging.StreamHandler(sys.stderr)
            stream.setFormatter(logging.Formatter(LOG_FORMAT))
            self.logger.addHandler(stream)

        log_dir = log_dir or os.getenv("JCRSIM_LOG_DIR")
        if log_dir:
            self.attach_log_dir(log_dir)

    def attach_log_dir(self, log_dir: str) -> Path:
        """Add a per-session log file under log_dir; idempotent"""
        if self.log_file is not None:
            return self.log_file
        log_file = Path(log_dir) / f"{self.name}_{self.session_id}.log"
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        self.logger.addHandler(handler)
        self.log_file = log_file
        return log_file

    def set_level(self, level: str) -> None:
        self.logger.setLevel(getattr(logging, level.upper(), logging.WARNING))

    def log_with_context(self, level: str, message: str, context: Optional[Dict[str, Any]] = None) -> None:
        """Log a message and keep a structured copy in the bounded buffer"""
        log_entry = {
            "timestamp": datetime.now().isoformat(),
            "level": level.upper(),
            "message": message,
            "session_id": self.session_id,
            "thread_id": threading.current_thread().ident,
            "context": context or {},
        }

        with self._buffer_lock:
            self.log_buffer.append(log_entry)

        if context:
            rendered = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({rendered})"
        getattr(self.logger, level.lower())(message, extra={"session_id": self.session_id})

    def log_numerical_event(self, operation: str, data: Dict[str, Any], level: str = "WARNING") -> None:
        """Record a solver diagnostic for the run's diagnostic file"""
        event = {
            "timestamp": datetime.now().isoformat(),
            "operation": operation,
            "data": data,
        }
        with self._buffer_lock:
            if len(self.numerical_events) >= LOG_DEFAULTS["max_events"]:
                self.numerical_events.pop(0)
            self.numerical_events.append(event)

        self.log_with_context(level, f"{operation}", data)

    def get_numerical_events(self) -> List[Dict[str, Any]]:
        with self._buffer_lock:
            return list(self.numerical_events)

    def clear_events(self) -> int:
        """Drop collected diagnostics; returns how many were dropped"""
        with self._buffer_lock:
            dropped = len(self.numerical_events)
            self.numerical_events.clear()
        return dropped

    def recent_entries(self, count: int = 10) -> List[Dict[str, Any]]:
        with self._buffer_lock:
            return list(self.log_buffer)[-count:]


run_logger = RunLogger("jcrsim")
