"""LDOF Configuration Manager
Centralized configuration: built-in defaults, an optional JSON file
and environment overrides (LDOF_SECTION__KEY=value).
"""
import os
import copy
import json
import logging
from typing import Dict, Any, Optional
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger("ldof.config")

_TRUE = ("true", "yes", "on")
_FALSE = ("false", "no", "off")


def available_cores() -> int:
    try:
        import psutil
        return psutil.cpu_count(logical=True) or 1
    except ImportError:
        return os.cpu_count() or 1


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """New dict with `override` laid over `base`, section by section."""
    merged = dict(base)
    for key, value in override.items():
        current = merged.get(key)
        if isinstance(current, dict) and isinstance(value, dict):
            merged[key] = deep_merge(current, value)
        else:
            merged[key] = value
    return merged


def parse_env_value(raw: str, like: Any = None) -> Any:
    """Parse an environment string, to the type of `like` when one is known."""
    text = raw.strip()
    lowered = text.lower()
    if isinstance(like, bool) or (like is None and lowered in _TRUE + _FALSE):
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    for kind in (int, float):
        if like is None or isinstance(like, kind):
            try:
                return kind(text)
            except ValueError:
                if like is not None:
                    raise ConfigError(f"expected {kind.__name__}, got {raw!r}") from None
    return text


class ConfigManager:
    """Layered configuration: defaults < file < environment."""

    DEFAULT_CONFIG = {
        "detection": {
            "metric": "euclidean",
            "backend": "tree",
        },
        "neighbors": {
            "leafsize": 16,
            "brute_force_dim": 16,
        },
        "evaluation": {
            "threads": 0,
            "theorem1_tolerance": 0.05,
        },
        "output": {
            "dir": ".",
        },
        "logging": {
            "level": "INFO",
            "format": "%(asctime)s [%(name)s] %(levelname)s: %(message)s",
            "file": None,
        },
    }

    def __init__(self, config_path: Optional[str] = None, env_prefix: str = "LDOF",
                 use_dotenv: bool = True):
        self.env_prefix = env_prefix
        self._config: Dict[str, Any] = copy.deepcopy(self.DEFAULT_CONFIG)
        if config_path:
            self._config = deep_merge(self._config, self._read_file(Path(config_path)))
        if use_dotenv:
            load_dotenv(override=False)
        self._apply_env()

    @staticmethod
    def _read_file(path: Path) -> Dict[str, Any]:
        if not path.is_file():
            logger.warning(f"Config file not found: {path}")
            return {}
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Malformed config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        logger.info(f"Loaded config from {path}")
        return data

    def _apply_env(self) -> None:
        prefix = f"{self.env_prefix}_"
        for key in sorted(os.environ):
            if not key.startswith(prefix) or "__" not in key:
                continue
            path = key[len(prefix):].lower().replace("__", ".")
            try:
                self.set(path, parse_env_value(os.environ[key], self.get(path)))
            except ConfigError as e:
                raise ConfigError(f"{key}: {e}") from e
            logger.debug(f"{key} overrides {path}")

    def get(self, path: str, default: Any = None) -> Any:
        node: Any = self._config
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, path: str, value: Any) -> None:
        *sections, leaf = path.split(".")
        node = self._config
        for section in sections:
            node = node.setdefault(section, {})
        node[leaf] = value

    def threads(self) -> int:
        """Worker cap; 0 or negative means every available core."""
        configured = int(self.get("evaluation.threads", 0) or 0)
        return configured if configured > 0 else available_cores()

    def output_path(self, name: str) -> Path:
        """Resolve a relative output file against the configured output dir."""
        p = Path(name)
        if p.is_absolute():
            return p
        return Path(self.get("output.dir", ".")) / p

    def export(self) -> Dict[str, Any]:
        return copy.deepcopy(self._config)
