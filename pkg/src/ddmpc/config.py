"""Flat key-value configuration files.

Files are TOML restricted in spirit to ``dotted.key = value`` lines, e.g.
``controller.L = 8``. They are read into a flat ``{"controller.L": 8}``
mapping so that callers never deal with nested tables.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Dict, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError


def flatten(tree: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in tree.items():
        full = f"{prefix}{key}"
        if isinstance(value, Mapping):
            out.update(flatten(value, full + "."))
        else:
            out[full] = value
    return out


def parse_config(text: str) -> Dict[str, Any]:
    try:
        return flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load_config(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(flat: Mapping[str, Any]) -> str:
    """Inverse of :func:`parse_config` for flat mappings of scalars/lists."""
    return "".join(f"{k} = {format_value(v)}\n" for k, v in flat.items())


def require(cfg: Mapping[str, Any], key: str) -> Any:
    if key not in cfg:
        raise ConfigError(f"missing required config key '{key}'")
    return cfg[key]
