"""Run persistence for experiment options, acceptance checks and summaries in JSONL format."""

import json
import re
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional


class RunStore:
    """Append-only JSONL run logger with experiment+timestamp naming."""

    def __init__(
        self,
        enabled: bool,
        experiment: str,
        run_dir: Path,
        options: Optional[Dict[str, Any]] = None,
    ):
        self.enabled = bool(enabled)
        self.experiment = experiment or "experiment"
        self.run_dir = Path(run_dir)
        self.options = options or {}
        self.path: Optional[Path] = None

        if self.enabled:
            self.run_dir.mkdir(parents = True, exist_ok = True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            self.path = self.run_dir / f"{_sanitize_name(self.experiment)}_{timestamp}.jsonl"
            self._append(
                {
                    "event": "meta",
                    "timestamp": _now_iso(),
                    "experiment": self.experiment,
                    "options": self.options,
                }
            )

    def record_check(
        self,
        name: str,
        passed: bool,
        observed: Any,
        threshold: Any,
        attempt: int = 1,
        trials: Optional[int] = None,
    ) -> None:
        """Record one acceptance check outcome; reruns use attempt > 1."""
        self._append(
            {
                "event": "check",
                "timestamp": _now_iso(),
                "name": name,
                "passed": bool(passed),
                "observed": _jsonable(observed),
                "threshold": _jsonable(threshold),
                "attempt": attempt,
                "trials": trials,
            }
        )

    def record_summary(self, passed: bool, rows: int, csv_path: Optional[Path], attempts: int) -> None:
        """Record the final outcome of the run."""
        self._append(
            {
                "event": "summary",
                "timestamp": _now_iso(),
                "passed": bool(passed),
                "rows": rows,
                "csv_path": str(csv_path) if csv_path is not None else None,
                "attempts": attempts,
            }
        )

    def get_path(self) -> Optional[Path]:
        """Return output file path when run saving is enabled."""
        return self.path

    def _append(self, payload: Dict[str, Any]) -> None:
        """Append one JSON line if persistence is enabled."""
        if not self.enabled or self.path is None:
            return

        with self.path.open("a", encoding = "utf-8") as file:
            file.write(json.dumps(payload, ensure_ascii = False) + "\n")


def _jsonable(value: Any) -> Any:
    """Floats that JSON cannot carry (nan, inf) become strings."""
    if isinstance(value, float) and (value != value or value in (float("inf"), float("-inf"))):
        return str(value)
    return value


def _sanitize_name(name: str) -> str:
    """Sanitize experiment name for a filesystem-safe run filename."""
    sanitized = re.sub(r"[^A-Za-z0-9_.-]+", "_", name.strip())
    return sanitized.strip("_") or "experiment"


def _now_iso() -> str:
    """Return current local timestamp in ISO-like format."""
    return datetime.now().strftime("%Y-%m-%dT%H:%M:%S")
