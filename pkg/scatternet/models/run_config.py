"""
Flat key=value run configuration mirroring the command-line flags.
"""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, Field

from scatternet.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


class RunConfig(BaseModel):
    """
    Values read from a config file: one `key = value` per line, `#` starts a
    comment. Keys are flag names with dashes or underscores.
    """
    entries: Dict[str, str] = Field(default_factory=dict, description="Raw values keyed by flag destination")
    source: Optional[str] = Field(None, description="File the values came from")

    @classmethod
    def parse(cls, text: str, source: Optional[str] = None) -> "RunConfig":
        entries: Dict[str, str] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{source or 'config'} line {number}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = _normalize_key(key)
            if not key:
                raise ConfigurationError(f"{source or 'config'} line {number}: empty key")
            if key in entries:
                raise ConfigurationError(f"{source or 'config'} line {number}: duplicate key {key!r}")
            entries[key] = value.strip()
        return cls(entries=entries, source=source)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Cannot read config {path}: {e}")
            raise ConfigurationError(f"Cannot read config file {path} ({e.strerror})") from e
        config = cls.parse(text, source=str(path))
        logger.info(f"Loaded {len(config.entries)} settings from {path}")
        return config

    def resolve(self, *parsers: argparse.ArgumentParser) -> Dict[str, Any]:
        """
        Convert the entries with the parsers' own option types.

        Args:
            parsers: The top-level and subcommand parsers the values are meant for

        Returns:
            Dict of destination -> typed value, suitable for set_defaults

        Raises:
            ConfigurationError: Unknown key or a value the option rejects
        """
        actions = {
            action.dest: action
            for parser in parsers
            for action in parser._actions
            if action.option_strings and action.dest not in ("help", "config")
        }
        unknown = sorted(key for key in self.entries if key not in actions)
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}")

        resolved: Dict[str, Any] = {}
        for key, raw in self.entries.items():
            action = actions[key]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                lowered = raw.lower()
                if lowered not in _TRUE | _FALSE:
                    raise ConfigurationError(f"Config key {key!r} expects a boolean, got {raw!r}")
                resolved[key] = lowered in _TRUE
                continue
            try:
                value = action.type(raw) if action.type else raw
            except (TypeError, ValueError, argparse.ArgumentTypeError) as e:
                raise ConfigurationError(f"Config key {key!r}: invalid value {raw!r} ({e})") from e
            if action.choices is not None and value not in action.choices:
                raise ConfigurationError(f"Config key {key!r}: {value!r} is not one of {sorted(action.choices)}")
            resolved[key] = value
        return resolved
