"""
Logging setup for the runner, with an in-memory buffer of recent records
"""

import json
import logging
from collections import deque
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

RUN_LOG_FORMATS = ("text", "json")


class BufferedLogHandler(logging.Handler):
    """
    Keeps the most recent records of a command in a ring buffer, so the
    command can write its own run log next to its artifacts
    """

    def __init__(self, buffer_size: int = 1000):
        super().__init__()
        self.records: deque = deque(maxlen=buffer_size)

    def emit(self, record: logging.LogRecord):
        try:
            self.records.append({
                "timestamp": datetime.fromtimestamp(record.created).isoformat(),
                "level": record.levelname,
                "source": record.name,
                "message": record.getMessage(),
            })
        except Exception:
            self.handleError(record)

    def snapshot(self, min_level: int = logging.NOTSET) -> List[Dict[str, Any]]:
        return [r for r in self.records if logging.getLevelName(r["level"]) >= min_level]

    def export(self, format: str = "text") -> str:
        """Buffered records as `text` lines or a `json` array."""
        records = self.snapshot()
        if format == "json":
            return json.dumps(records, indent=2)
        if format == "text":
            return "".join(f"{r['timestamp']} [{r['level']}] {r['source']}: {r['message']}\n" for r in records)
        raise ValueError(f"Unsupported format: {format}")

    def write(self, path) -> Path:
        """Write the run log; a .json suffix selects the JSON format."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.export("json" if path.suffix == ".json" else "text"), encoding="utf-8")
        return path


def setup_logging(config: Dict[str, Any], service_name: Optional[str] = None) -> BufferedLogHandler:
    """
    Configure the root logger.

    Args:
        config: the `logging:` section of the run configuration
            - level: DEBUG, INFO, WARNING, ERROR or CRITICAL
            - <service_name>: optional dict whose 'level' overrides the global level
            - buffer_size: records kept for the run log
            - file_output: optional path of a log file
        service_name: section name of the per-service override (e.g. 'runner')

    Returns:
        The buffer handler attached to the root logger
    """
    service = config.get(service_name) if service_name else None
    level = service.get('level', 'INFO') if isinstance(service, dict) else config.get('level', 'INFO')
    level_no = logging.getLevelName(str(level).upper())
    if not isinstance(level_no, int):
        raise ValueError(f"unknown log level '{level}'")

    root_logger = logging.getLogger()
    root_logger.setLevel(level_no)
    root_logger.handlers.clear()

    formatter = logging.Formatter(CONSOLE_FORMAT)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if config.get('file_output'):
        handlers.append(logging.FileHandler(config['file_output']))
    for handler in handlers:
        handler.setFormatter(formatter)

    buffer_handler = BufferedLogHandler(int(config.get('buffer_size', 1000)))
    handlers.append(buffer_handler)
    for handler in handlers:
        handler.setLevel(level_no)
        root_logger.addHandler(handler)
    return buffer_handler
