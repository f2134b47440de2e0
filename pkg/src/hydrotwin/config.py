"""Flat ``name = value`` config dialect shared by loop configs, sampling
plans, threshold vectors and scenario files.

One entry per line, ``#`` starts a comment. Keys may repeat (scenario
``event`` lines); :func:`read_entries` keeps them in file order.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path


class ConfigError(ValueError):
    """Malformed config file or value."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


def parse_entries(text: str, path: str | None = None) -> list[tuple[int, str, str]]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'name = value', got {raw.strip()!r}", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, path)
        entries.append((lineno, key, value))
    return entries


def read_entries(path) -> list[tuple[int, str, str]]:
    path = Path(path)
    return parse_entries(path.read_text(), str(path))


def parse_float(value: str, lineno: int | None = None, path: str | None = None) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"not a number: {value!r}", lineno, path) from None


def parse_float_list(value: str, lineno: int | None = None, path: str | None = None) -> list[float]:
    items = [v.strip() for v in value.split(",") if v.strip()]
    return [parse_float(v, lineno, path) for v in items]


def load_flat_dataclass(cls, path, defaults=None):
    """Build a dataclass of float fields from a config file.

    Keys not named in the file keep their value from ``defaults`` (or the
    dataclass defaults). Unknown keys are an error.
    """
    path = str(path)
    base = defaults if defaults is not None else cls()
    names = {f.name for f in dataclasses.fields(cls)}
    updates = {}
    for lineno, key, value in read_entries(path):
        if key not in names:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        updates[key] = parse_float(value, lineno, path)
    try:
        return dataclasses.replace(base, **updates)
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None


def dump_flat_dataclass(obj, header: str | None = None) -> str:
    lines = []
    if header:
        lines.append(f"# {header}")
    for f in dataclasses.fields(obj):
        lines.append(f"{f.name} = {getattr(obj, f.name)!r}")
    return "\n".join(lines) + "\n"
