"""Option parsing shared by the experiment subcommands."""

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from matvec_lab.errors import ConfigError


BOOL_TRUE = {"1", "true", "yes", "y", "on"}
BOOL_FALSE = {"0", "false", "no", "n", "off"}
LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR"}
ENV_PREFIX = "MATVEC_LAB_"

# Experiment parameters and how their raw text is parsed.
PARAMETER_KINDS = {
    "n": "int",
    "eps": "float_grid",
    "p": "float_grid",
    "q": "int_grid",
    "q_spec": "int",
    "r": "int_grid",
    "s": "int_grid",
    "t": "int_grid",
    "trials": "int",
    "seed": "int",
    "strategy": "str",
    "k": "int",
    "case": "int_grid",
    "compare_n": "int",
    "compare_trials": "int",
    "d_max": "int",
    "spectra": "str_grid",
}


@dataclass
class ExperimentOptions:
    """Runtime switches plus resolved experiment parameters."""

    experiment: str = ""
    threads: int = 1
    log_level: str = "INFO"
    trace: bool = False
    save_run: bool = False
    run_dir: Path = Path("runs")
    out: Optional[Path] = None
    config_path: Optional[Path] = None
    parameters: Dict[str, Any] = field(default_factory = dict)

    def as_dict(self) -> dict:
        """Return JSON-serializable dict form for run metadata."""
        parameters = {
            key: list(value) if isinstance(value, tuple) else value
            for key, value in self.parameters.items()
        }
        return {
            "experiment": self.experiment,
            "threads": self.threads,
            "log_level": self.log_level,
            "trace": self.trace,
            "save_run": self.save_run,
            "run_dir": str(self.run_dir),
            "out": str(self.out) if self.out is not None else None,
            "config_path": str(self.config_path) if self.config_path is not None else None,
            "parameters": parameters,
        }


def add_runtime_args(parser: Any) -> None:
    """Attach shared runtime flags to an argparse parser."""
    import argparse

    parser.add_argument(
        "--config",
        dest = "config",
        default = None,
        help = "Flat key=value file with parameter defaults (flags win).",
    )
    parser.add_argument(
        "--out",
        dest = "out",
        default = None,
        help = "Output path (CSV for sweeps, spectrum file for gen-instance).",
    )
    parser.add_argument(
        "--threads",
        dest = "threads",
        type = int,
        default = None,
        help = "Worker threads for trials (default: MATVEC_LAB_THREADS or 1).",
    )
    parser.add_argument(
        "--log-level",
        dest = "log_level",
        default = None,
        help = "Logging level: DEBUG, INFO, WARNING or ERROR.",
    )
    parser.add_argument(
        "--trace",
        dest = "trace",
        action = argparse.BooleanOptionalAction,
        default = None,
        help = "Log one line per trial.",
    )
    parser.add_argument(
        "--save-run",
        dest = "save_run",
        action = argparse.BooleanOptionalAction,
        default = None,
        help = "Save the run log (options, checks, summary) to JSONL.",
    )
    parser.add_argument(
        "--run-dir",
        dest = "run_dir",
        default = None,
        help = "Run log directory (default: runs/).",
    )


def add_parameter_args(parser: Any) -> None:
    """Attach experiment parameter flags. Grids accept a:b:step or a comma list."""
    parser.add_argument("--n", dest = "n", default = None, help = "Operator dimension.")
    parser.add_argument("--eps", dest = "eps", default = None, help = "Accuracy parameter(s).")
    parser.add_argument("--p", dest = "p", default = None, help = "Schatten exponent(s).")
    parser.add_argument("--q", dest = "q", default = None, help = "Krylov iteration grid.")
    parser.add_argument("--q-spec", dest = "q_spec", default = None, help = "Degree q of the hard spectrum.")
    parser.add_argument("--r", dest = "r", default = None, help = "Block Krylov iteration grid.")
    parser.add_argument("--s", dest = "s", default = None, help = "Block size grid.")
    parser.add_argument("--t", dest = "t", default = None, help = "Rectangular Krylov degree grid.")
    parser.add_argument("--trials", dest = "trials", default = None, help = "Trials per setting.")
    parser.add_argument("--seed", dest = "seed", default = None, help = "Base seed (required).")
    parser.add_argument("--strategy", dest = "strategy", default = None, help = "Adaptive strategy name.")
    parser.add_argument("--K", dest = "k", default = None, help = "Number of adaptive queries.")
    parser.add_argument("--case", dest = "case", default = None, help = "Good-vector case id(s), 1-4.")
    parser.add_argument("--compare-n", dest = "compare_n", default = None, help = "Hard-instance size for the adaptive-vs-block comparison (0 skips it).")
    parser.add_argument("--compare-trials", dest = "compare_trials", default = None, help = "Trials for the adaptive-vs-block comparison.")
    parser.add_argument("--d-max", dest = "d_max", default = None, help = "Largest Chebyshev degree.")
    parser.add_argument("--spectra", dest = "spectra", default = None, help = "Spectrum library names (comma list).")


def load_config_file(path: Optional[Any]) -> Dict[str, str]:
    """Read a flat key=value file; keys are normalized to snake_case."""
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    values = {}
    for key, value in dotenv_values(config_path).items():
        if value is None:
            continue
        normalized = key.strip().lower().replace("-", "_")
        if normalized.startswith(ENV_PREFIX.lower()):
            normalized = normalized[len(ENV_PREFIX):]
        values[normalized] = value
    return values


def experiment_options_from_args(
    args: Any,
    experiment: str,
    defaults: Mapping[str, Any],
) -> ExperimentOptions:
    """Build options with CLI > config file > ENV > default precedence."""
    raw_config = getattr(args, "config", None)
    file_values = load_config_file(raw_config)

    threads = _resolve_int(
        cli_value = getattr(args, "threads", None),
        file_value = file_values.get("threads"),
        env_name = "MATVEC_LAB_THREADS",
        default = 1,
    )
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    log_level = _resolve_str(
        cli_value = getattr(args, "log_level", None),
        file_value = file_values.get("log_level"),
        env_name = "MATVEC_LAB_LOG_LEVEL",
        default = "INFO",
    ).upper()
    if log_level not in LOG_LEVELS:
        raise ConfigError(f"log level must be one of {sorted(LOG_LEVELS)}, got {log_level}")
    trace = _resolve_bool(
        cli_value = getattr(args, "trace", None),
        file_value = file_values.get("trace"),
        env_name = "MATVEC_LAB_TRACE",
        default = False,
    )
    save_run = _resolve_bool(
        cli_value = getattr(args, "save_run", None),
        file_value = file_values.get("save_run"),
        env_name = "MATVEC_LAB_SAVE_RUN",
        default = False,
    )
    raw_run_dir = _resolve_str(
        cli_value = getattr(args, "run_dir", None),
        file_value = file_values.get("run_dir"),
        env_name = "MATVEC_LAB_RUN_DIR",
        default = "runs",
    )
    raw_out = _resolve_str(
        cli_value = getattr(args, "out", None),
        file_value = file_values.get("out"),
        env_name = "MATVEC_LAB_OUT",
        default = "",
    )

    return ExperimentOptions(
        experiment = experiment,
        threads = threads,
        log_level = log_level,
        trace = trace,
        save_run = save_run,
        run_dir = Path(raw_run_dir),
        out = Path(raw_out) if raw_out else None,
        config_path = Path(raw_config) if raw_config else None,
        parameters = resolve_parameters(args, file_values, defaults),
    )


def resolve_parameters(
    args: Any,
    file_values: Mapping[str, str],
    defaults: Mapping[str, Any],
) -> Dict[str, Any]:
    """Resolve every known experiment parameter; unknown defaults are ignored."""
    resolvers = {
        "int": _resolve_int,
        "int_grid": _resolve_int_grid,
        "float_grid": _resolve_float_grid,
        "str": _resolve_str,
        "str_grid": _resolve_str_grid,
    }
    parameters = {}
    for key, kind in PARAMETER_KINDS.items():
        parameters[key] = resolvers[kind](
            cli_value = getattr(args, key, None),
            file_value = file_values.get(key),
            env_name = f"{ENV_PREFIX}{key.upper()}",
            default = defaults.get(key),
        )
    return parameters


def format_value(value: Any) -> str:
    """Render a resolved value the way it would be written in a config file."""
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(item) for item in value)
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def parse_grid(raw: str, cast: Any) -> Tuple[Any, ...]:
    """
    Parse `a:b:step` (inclusive of b) or a comma list.

    Raises:
        ConfigError: on malformed text, a nonpositive step, or an empty grid.
    """
    text = str(raw).strip()
    if not text:
        raise ConfigError("Empty grid.")
    try:
        if ":" in text:
            parts = [part.strip() for part in text.split(":")]
            if len(parts) not in (2, 3):
                raise ConfigError(f"Grid '{text}' must look like a:b or a:b:step.")
            start, stop = cast(parts[0]), cast(parts[1])
            step = cast(parts[2]) if len(parts) == 3 else cast("1")
            if step <= 0:
                raise ConfigError(f"Grid step must be positive, got {step}.")
            values = []
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            for index in range(max(count, 0)):
                values.append(start + index * step)
            grid = tuple(values)
        else:
            grid = tuple(cast(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"Cannot parse grid '{text}': {exc}") from exc
    if not grid:
        raise ConfigError(f"Grid '{text}' is empty.")
    return grid


def _pick_raw(cli_value: Any, file_value: Any, env_name: str) -> Optional[Any]:
    """First non-empty of CLI, config file, environment."""
    if cli_value is not None and str(cli_value).strip():
        return cli_value
    if file_value is not None and str(file_value).strip():
        return file_value
    raw_env = os.getenv(env_name)
    if raw_env is not None and raw_env.strip():
        return raw_env
    return None


def _resolve_bool(cli_value: Any, file_value: Any, env_name: str, default: bool) -> bool:
    """Resolve bool with CLI > file > ENV > default precedence."""
    if isinstance(cli_value, bool):
        return cli_value
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return default

    normalized = str(raw).strip().lower()
    if normalized in BOOL_TRUE:
        return True
    if normalized in BOOL_FALSE:
        return False
    raise ConfigError(f"{env_name}: expected a boolean, got '{raw}'")


def _resolve_int(cli_value: Any, file_value: Any, env_name: str, default: Optional[int]) -> Optional[int]:
    """Resolve int option; malformed values are errors, not defaults."""
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return default
    try:
        return int(str(raw).strip())
    except ValueError as exc:
        raise ConfigError(f"{env_name}: expected an integer, got '{raw}'") from exc


def _resolve_str(cli_value: Any, file_value: Any, env_name: str, default: Optional[str]) -> Optional[str]:
    """Resolve string option with CLI > file > ENV > default precedence."""
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return default
    return str(raw).strip()


def _resolve_int_grid(cli_value: Any, file_value: Any, env_name: str, default: Any) -> Optional[Tuple[int, ...]]:
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return tuple(default) if default is not None else None
    return parse_grid(raw, int)


def _resolve_float_grid(cli_value: Any, file_value: Any, env_name: str, default: Any) -> Optional[Tuple[float, ...]]:
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return tuple(float(value) for value in default) if default is not None else None
    return parse_grid(raw, float)


def _resolve_str_grid(cli_value: Any, file_value: Any, env_name: str, default: Any) -> Optional[Tuple[str, ...]]:
    raw = _pick_raw(cli_value, file_value, env_name)
    if raw is None:
        return tuple(default) if default is not None else None
    names = tuple(part.strip() for part in str(raw).split(",") if part.strip())
    if not names:
        raise ConfigError(f"{env_name}: empty name list")
    return names
