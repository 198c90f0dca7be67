"""Flat TOML-subset config files and per-run manifests.

The config format is a single table of ``key = value`` lines: strings in
double quotes, integers, floats, booleans, and ``[a, b]`` lists of those.
Sections, nesting, and dates are not supported (Python 3.10 lacks tomllib;
this subset covers every knob the CLI exposes).
"""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import ConfigError


def _parse_value(raw: str, path, lineno: int):
    raw = raw.strip()
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(part, path, lineno) for part in inner.split(",")]
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: cannot parse value {raw!r}")


def load_config(path) -> dict:
    """Parse the flat key=value config file into a dict."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                raise ConfigError(f"{path}:{lineno}: sections are not supported")
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            value = value.split("#", 1)[0] if not value.strip().startswith('"') else value
            out[key.strip()] = _parse_value(value, path, lineno)
    return out


@dataclass
class RunManifest:
    subcommand: str
    config_path: str | None
    inputs: list[str]
    outputs: list[str]
    seed: int | None
    corpus_hash: str | None
    tool_version: str
    created_utc: str = field(default_factory=lambda: datetime.now(timezone.utc)
                             .strftime("%Y-%m-%dT%H:%M:%SZ"))
    platform: str = field(default_factory=platform.platform)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, sort_keys=True, indent=2)
            fh.write("\n")


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
