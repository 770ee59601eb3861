"""Per-trial trace logger."""

import logging
from typing import Any, Mapping, Optional


class TrialTraceLogger:
    """Conditional one-line-per-trial logging of experiment statistics."""

    def __init__(self, enabled: bool, logger: Optional[logging.Logger] = None):
        self.enabled = bool(enabled)
        self.logger = logger or logging.getLogger("MatvecLab-Trace")

    def log_trial(self, experiment: str, trial: Any, stats: Mapping[str, Any]) -> None:
        """Log the statistics of one trial as name=value pairs."""
        if not self.enabled:
            return

        summary = ", ".join(f"{name}={_format(value)}" for name, value in stats.items())
        self.logger.info(f"[TRIAL:{experiment}#{trial}] {_shorten(summary, 400) or '(no statistics)'}")


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _shorten(text: str, max_chars: int) -> str:
    """Trim long text for concise logs."""
    normalized = text.replace("\n", "\\n").strip()
    if len(normalized) <= max_chars:
        return normalized
    return normalized[:max_chars] + "..."
