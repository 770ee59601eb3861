"""Unit tests for per-trial trace logging."""

import logging
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from tests.helpers import run_tests
from utils.trace_logger import TrialTraceLogger


class _ListHandler(logging.Handler):
    def __init__(self):
        super().__init__()
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def _capturing_logger(name):
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    handler = _ListHandler()
    logger.handlers = [handler]
    return logger, handler


def test_trial_line_format():
    """One line per trial with compact floats."""
    logger, handler = _capturing_logger("MatvecLab-Trace-Test-Format")
    tracer = TrialTraceLogger(enabled = True, logger = logger)
    tracer.log_trial("lower-single", 3, {"correlation_sq@q8": 0.123456789, "queries@q8": 9})

    assert handler.messages == ["[TRIAL:lower-single#3] correlation_sq@q8=0.123457, queries@q8=9"]

    tracer.log_trial("lift-sim", 0, {})
    assert handler.messages[-1] == "[TRIAL:lift-sim#0] (no statistics)"

    print("PASS: test_trial_line_format")


def test_disabled_and_long_lines():
    """Disabled tracer is silent; long summaries are cut."""
    logger, handler = _capturing_logger("MatvecLab-Trace-Test-Long")
    TrialTraceLogger(enabled = False, logger = logger).log_trial("x", 0, {"a": 1.0})
    assert handler.messages == []

    stats = {f"stat_{index}": float(index) for index in range(100)}
    TrialTraceLogger(enabled = True, logger = logger).log_trial("x", 1, stats)
    assert handler.messages[0].endswith("..."), "Long trial lines should be shortened"

    print("PASS: test_disabled_and_long_lines")


if __name__ == "__main__":
    sys.exit(0 if run_tests([
        test_trial_line_format,
        test_disabled_and_long_lines,
    ]) else 1)
