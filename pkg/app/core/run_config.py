#!/usr/bin/env python3
"""
Loader for experiment config files.

Format: one ``key = value`` per line, ``#`` comments and blank lines
allowed, dotted keys select a section::

    seed = 7
    stride_s = 4
    scene.count = 20
    sr.lambda_smooth = 0.2
"""

import re
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.run_config import RunConfig

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Flat key = value lines → nested dict of raw strings."""
    nested: Dict[str, Any] = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"{source}:{lineno}: invalid key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)

        *sections, leaf = key.split(".")
        node = nested
        for section in sections:
            node = node.setdefault(section, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{source}:{lineno}: {section!r} is both a value and a section")
        if isinstance(node.get(leaf), dict):
            raise ConfigError(f"{source}:{lineno}: {key!r} is both a value and a section")
        node[leaf] = value
    return nested


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def build_run_config(values: Dict[str, Any], source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation_error(exc)}") from exc


def load_run_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read ``path`` (or start from defaults when None) and apply CLI overrides
    given as dotted keys, e.g. ``{"seed": 3, "scene.count": 2}``.
    """
    values: Dict[str, Any] = {}
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        source = str(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        values = parse_config_text(path.read_text(encoding="utf-8"), source)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        *sections, leaf = key.split(".")
        node = values
        for section in sections:
            node = node.setdefault(section, {})
        node[leaf] = value
    return build_run_config(values, source)
