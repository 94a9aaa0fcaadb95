#!/usr/bin/env python3

import json
import os
from typing import Any, Dict, Optional
from pathlib import Path

CONFIG_DEFAULTS: Dict[str, Any] = {
    "lambda": 1.0,
    "eta": 0.0,
    "delta": 0.0,
    "delta0": None,
    "kappa": 0.0,
    "epsilon": 0.0,
    "n_systems": 1,
    "scaled": False,
    "format": "csv",
    "output": None,
    "threads": 1,
    "seed": 0,
    "n_fock": 40,
    "max_fock": 1024,
    "nmax": 5,
    "tol": 1e-9,
    "n_traj": 1,
    "duration": 100.0,
    "delta_start": None,
    "delta_end": None,
    "n_output": 200,
    "q_points": 81,
    "q_extent": None,
    "grid": None,
    "grid_y": None,
    "log_level": "WARNING",
    "log_dir": None,
}

GRID_KEYS = ("grid", "grid_y")

GRID_AXES = ("delta", "eta", "lambda_over_delta", "delta_over_lambda", "delta_bar", "eps_bar")

FORMAT_MARKER = "# jcrsim-format:"

# keys of a result-file echo that are not replayed
ECHO_SKIPPED = ("subcommand", "output")

ENV_MAPPINGS = {
    "JCRSIM_THREADS": ("threads", int),
    "JCRSIM_LOG_LEVEL": ("log_level", str),
    "JCRSIM_LOG_DIR": ("log_dir", str),
    "JCRSIM_MAX_FOCK": ("max_fock", int),
}


class ConfigError(ValueError):
    """Malformed configuration file, flag or environment value."""


def parse_value(text: str) -> Any:
    """Best-effort scalar parse: bool, int, float, else the stripped text"""
    value = text.strip()
    lowered = value.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null", ""):
        return None
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def parse_grid(text: str) -> Dict[str, Any]:
    """Parse 'axis start end count' into a grid dictionary"""
    parts = text.split()
    if len(parts) != 4:
        raise ConfigError(f"grid needs 'axis start end count', got {text!r}")
    axis, start, end, count = parts
    if axis not in GRID_AXES:
        raise ConfigError(f"unknown grid axis {axis!r}; expected one of {', '.join(GRID_AXES)}")
    try:
        grid = {"axis": axis, "start": float(start), "end": float(end), "count": int(count)}
    except ValueError as e:
        raise ConfigError(f"bad grid numbers in {text!r}: {e}") from e
    if grid["count"] < 1:
        raise ConfigError(f"grid count must be >= 1, got {grid['count']}")
    return grid


class ConfigurationManager:
    def __init__(self, config_path: Optional[str] = None) -> None:
        self.config_path = Path(config_path) if config_path else None
        self.config_cache: Dict[str, Any] = {}
        self._config_loaded = False

    def load_config(self) -> Dict[str, Any]:
        """Merge defaults, the key = value file and environment variables"""
        if self._config_loaded:
            return self.config_cache

        file_config = self._load_file_config() if self.config_path else {}
        env_config = self._load_env_config()

        self.config_cache = {**CONFIG_DEFAULTS, **file_config, **env_config}
        self._config_loaded = True
        return self.config_cache

    def _load_file_config(self) -> Dict[str, Any]:
        try:
            text = self.config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {self.config_path}: {e}") from e
        if text.startswith(FORMAT_MARKER) or text.lstrip().startswith("{"):
            return self._load_echo(text)

        file_config: Dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{self.config_path}:{number}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{self.config_path}:{number}: empty key")
            key = key.replace("-", "_")
            file_config[key] = parse_grid(value) if key in GRID_KEYS else parse_value(value)
        return file_config

    def _load_echo(self, text: str) -> Dict[str, Any]:
        """Configuration echoed into a CSV or JSON result file, for replaying a run"""
        try:
            if text.startswith(FORMAT_MARKER):
                line = next(row for row in text.splitlines() if row.startswith("# config: "))
                echo = json.loads(line[len("# config: "):])
            else:
                echo = json.loads(text)["config"]
        except (StopIteration, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{self.config_path}: no readable config echo") from e
        if not isinstance(echo, dict):
            raise ConfigError(f"{self.config_path}: config echo is not a mapping")
        return {("lambda" if key == "lam" else key): value
                for key, value in echo.items() if key not in ECHO_SKIPPED}

    def _load_env_config(self) -> Dict[str, Any]:
        """Load configuration from environment variables"""
        env_config = {}
        for env_var, (config_key, cast) in ENV_MAPPINGS.items():
            value = os.getenv(env_var)
            if not value:
                continue
            try:
                env_config[config_key] = cast(value)
            except ValueError as e:
                raise ConfigError(f"{env_var}={value!r} is not a valid {cast.__name__}") from e
        return env_config

    def get_config(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key"""
        config = self.load_config()

        current: Any = config
        for k in key.split('.'):
            if isinstance(current, dict) and k in current:
                current = current[k]
            else:
                return default
        return current

    def update_config(self, key: str, value: Any) -> bool:
        """Update configuration value"""
        config = self.load_config()

        keys = key.split('.')
        current = config
        for k in keys[:-1]:
            if not isinstance(current.get(k), dict):
                current[k] = {}
            current = current[k]
        current[keys[-1]] = value
        return True

    def get_debug_info(self) -> Dict[str, Any]:
        """Get debugging information about the merged configuration"""
        return {
            "config_path": str(self.config_path) if self.config_path else None,
            "environment": {var: os.getenv(var) for var in ENV_MAPPINGS if os.getenv(var)},
            "cache_size": len(self.config_cache),
            "full_config": dict(self.config_cache),
        }

